"""
Scoring forecasts and auditing published numbers
================================================

RMSE and MAE measure pointwise error; the common-part-of-commuters score
measures how much flow mass two OD matrices share, which is what city
planners actually compare. The report generator also ingests rows copied
from published benchmark tables and recomputes their claimed improvement
percentages.
"""

import numpy as np

from odflow import PublishedRow, build_published_report, cpc, mae, rmse, save_report
from odflow.harness import report_to_markdown
from odflow.metrics import relative_change

predicted = np.array([[0.0, 3.0], [2.0, 0.0]])
actual = np.array([[1.0, 3.0], [5.0, 0.0]])

# rmse punishes the big miss on the 5; mae treats all misses linearly.
print(f"rmse {rmse(predicted, actual):.4f}, mae {mae(predicted, actual):.4f}")

# cpc is the shared mass: 2*sum(min)/ (sum + sum), 1 on identical flows,
# 0 when no cell overlaps.
print(f"cpc {cpc(predicted, actual):.4f}")
print(f"cpc identical {cpc(actual, actual)}, disjoint "
      f"{cpc(np.array([[2.0, 0.0]]), np.array([[0.0, 7.0]]))}")

# relative_change is the signed fraction used for improvement claims.
print(f"relative_change(6.0, 8.0) = {relative_change(6.0, 8.0):+.4f}")

# Rows copied from a results table: the strongest prior model as the
# baseline, a new model with the percentages its authors claimed. The
# report recomputes each claim from the raw numbers and flags any gap
# larger than 0.1 percentage points.
rows = [
    PublishedRow.from_dict({"name": "prior-best", "rmse": 14.12, "mae": 11.95, "cpc": 0.58}),
    PublishedRow.from_dict(
        {
            "name": "new-model",
            "rmse": 9.32,
            "mae": 7.34,
            "cpc": 0.62,
            "claimed_change_pct": {"cpc": 6.89, "rmse": -30.0},
        }
    ),
]
report = build_published_report(rows, baseline="prior-best")
row = report.row("new-model")
for key, flag in sorted(row.claim_flags.items()):
    print(f"{key}: computed {row.changes_pct[key]:+.2f}%, "
          f"claimed {row.claimed_change_pct[key]:+.2f}% -> {flag}")

# Reports render to markdown (best value per metric in bold), CSV, and
# JSON; save_report writes the JSON form.
print()
print(report_to_markdown(report))

import tempfile
from pathlib import Path

with tempfile.TemporaryDirectory() as tmp:
    path = save_report(report, Path(tmp) / "report.json")
    print(f"saved {path.name}: {path.stat().st_size} bytes")
