"""End-to-end experiment driver: config file to comparison report.

A single JSON config names the dataset, tessellation, time axis, split
instant, evaluation mode, and models.  The driver builds the OD tensor,
splits it, runs every model origin-by-origin (rolling one-step by default),
assembles predicted OD matrices, scores them, and writes a report.  Rows
copied from published result tables can ride along for comparison; their
claimed percentage changes are recomputed and flagged when they disagree
with the arithmetic.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapter_bridge import AdapterConfig, AdapterSession
from .flows import (
    ODTensor,
    build_od_tensor,
    build_od_tensor_from_counts,
    split_train_test,
)
from .forecasters import (
    ForecastRequest,
    ModelSpec,
    forecast_with_spec,
    postprocess_counts,
)
from .ingestion import TimeAxis, parse_od_counts, parse_timestamp, parse_trips
from .metrics import cpc, mae, relative_change, rmse
from .synth import load_synthetic_city
from .tessellation import BoundingBox, Tessellation, build_square_grid, load_polygon_tessellation

__all__ = [
    "CLAIM_TOLERANCE_PP",
    "METRIC_KEYS",
    "CHANGE_KEYS",
    "PUBLISHED_KEYS",
    "ConfigError",
    "ExperimentError",
    "EvalSettings",
    "PublishedRow",
    "ExperimentConfig",
    "LoadedDataset",
    "ReportRow",
    "EvaluationReport",
    "load_dataset",
    "run_experiment",
    "build_published_report",
    "write_report",
    "save_report",
    "load_report",
    "resolve_workers",
]

#: Claimed vs. recomputed percentage changes matching within this many
#: percentage points count as consistent.
CLAIM_TOLERANCE_PP = 0.1

METRIC_KEYS = (
    "rmse_od",
    "mae_od",
    "cpc",
    "rmse_flows",
    "rmse_od_macro",
    "mae_od_macro",
    "cpc_macro",
)
CHANGE_KEYS = ("rmse_od", "mae_od", "cpc", "rmse_flows")
PUBLISHED_KEYS = ("rmse_od", "mae_od", "cpc")
_CLAIM_KEY_MAP = {"rmse": "rmse_od", "mae": "mae_od", "cpc": "cpc"}

_DATASET_KINDS = ("synthetic_dir", "trips", "od_counts")
_CONFIG_KEYS = {
    "dataset",
    "tessellation",
    "time_axis",
    "split_instant",
    "split_fraction",
    "evaluation",
    "models",
    "baseline",
    "postprocess",
    "include_self_loops",
    "published_rows",
    "workers",
    "output_dir",
}


class ConfigError(ValueError):
    """The experiment config is structurally or semantically invalid."""


class ExperimentError(RuntimeError):
    """A pipeline stage failed; the message carries origin/model context."""


@dataclass(frozen=True)
class EvalSettings:
    """Rolling one-step (default) or a single fixed-horizon forecast."""

    mode: str = "rolling"
    horizon: int = 1
    context_length: int | None = None

    def __post_init__(self):
        if self.mode not in ("rolling", "fixed"):
            raise ConfigError(f"evaluation mode must be rolling or fixed, got {self.mode!r}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.mode == "rolling" and self.horizon != 1:
            raise ConfigError("rolling evaluation is one-step; leave horizon at 1")
        if self.context_length is not None and self.context_length < 1:
            raise ConfigError(f"context_length must be >= 1, got {self.context_length}")


@dataclass
class PublishedRow:
    """A result row copied from a published table, with optional claims."""

    name: str
    rmse: float
    mae: float
    cpc: float
    claimed_change_pct: dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "PublishedRow":
        try:
            name = str(data["name"])
            values = {key: float(data[key]) for key in ("rmse", "mae", "cpc")}
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"published row needs name, rmse, mae, cpc: {data!r}") from exc
        if any(not math.isfinite(v) or v < 0 for v in values.values()):
            raise ConfigError(f"published metrics must be finite and >= 0: {data!r}")
        claimed: dict[str, float] = {}
        for key, value in (data.get("claimed_change_pct") or {}).items():
            if key not in _CLAIM_KEY_MAP:
                raise ConfigError(
                    f"unknown claimed-change metric {key!r}; use rmse, mae, or cpc"
                )
            claimed[_CLAIM_KEY_MAP[key]] = float(value)
        return cls(name=name, claimed_change_pct=claimed, **values)


def _canonical_digest(raw: dict) -> str:
    payload = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:12]


def _parse_instant(value, what: str) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        try:
            return parse_timestamp(value)
        except ValueError as exc:
            raise ConfigError(f"{what} is not a timestamp: {value!r}") from exc
    raise ConfigError(f"{what} must be epoch seconds or an ISO-8601 string, got {value!r}")


@dataclass
class ExperimentConfig:
    """Validated experiment description plus its provenance digest."""

    raw: dict
    digest: str
    base_dir: Path
    dataset_kind: str
    dataset_path: Path
    dataset_columns: dict[str, str] | None
    tess_spec: dict | None
    axis_spec: dict | None
    split_instant: float | None
    split_fraction: float | None
    evaluation: EvalSettings
    models: list[tuple[str, ModelSpec]]
    baseline: str
    round_to_counts: bool
    include_self_loops: bool
    published_rows: list[PublishedRow]
    workers: int | None
    output_dir: Path | None

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text("utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, base_dir=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str | Path = ".") -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        base = Path(base_dir)

        dataset = raw.get("dataset")
        if not isinstance(dataset, dict) or dataset.get("kind") not in _DATASET_KINDS:
            raise ConfigError(f"dataset.kind must be one of {_DATASET_KINDS}")
        if "path" not in dataset:
            raise ConfigError("dataset.path is required")
        columns = dataset.get("columns")
        if columns is not None and (
            not isinstance(columns, dict)
            or not all(isinstance(k, str) and isinstance(v, str) for k, v in columns.items())
        ):
            raise ConfigError("dataset.columns must map column names to header names")

        synthetic = dataset["kind"] == "synthetic_dir"
        tess_spec = raw.get("tessellation")
        axis_spec = raw.get("time_axis")
        if not synthetic:
            cls._check_tess_spec(tess_spec)
            cls._check_axis_spec(axis_spec)

        if ("split_instant" in raw) == ("split_fraction" in raw):
            raise ConfigError("provide exactly one of split_instant or split_fraction")
        split_instant = None
        split_fraction = None
        if "split_instant" in raw:
            split_instant = _parse_instant(raw["split_instant"], "split_instant")
        else:
            split_fraction = raw["split_fraction"]
            if (
                not isinstance(split_fraction, (int, float))
                or isinstance(split_fraction, bool)
                or not (0.0 < float(split_fraction) < 1.0)
            ):
                raise ConfigError(f"split_fraction must be in (0, 1), got {split_fraction!r}")
            split_fraction = float(split_fraction)

        eval_raw = raw.get("evaluation") or {}
        if not isinstance(eval_raw, dict):
            raise ConfigError("evaluation must be an object")
        evaluation = EvalSettings(
            mode=eval_raw.get("mode", "rolling"),
            horizon=int(eval_raw.get("horizon", 1)),
            context_length=(
                None
                if eval_raw.get("context_length") is None
                else int(eval_raw["context_length"])
            ),
        )

        models_raw = raw.get("models")
        if not isinstance(models_raw, list) or not models_raw:
            raise ConfigError("config needs a non-empty models list")
        models: list[tuple[str, ModelSpec]] = []
        for entry in models_raw:
            if not isinstance(entry, dict) or "kind" not in entry:
                raise ConfigError(f"each model needs a kind: {entry!r}")
            try:
                spec = ModelSpec(kind=entry["kind"], params=entry.get("params") or {})
            except ValueError as exc:
                raise ConfigError(f"bad model entry {entry!r}: {exc}") from exc
            models.append((str(entry.get("name", spec.kind)), spec))

        published = [PublishedRow.from_dict(row) for row in raw.get("published_rows") or []]

        names = [name for name, _ in models] + [row.name for row in published]
        duplicates = {n for n in names if names.count(n) > 1}
        if duplicates:
            raise ConfigError(f"duplicate row names: {sorted(duplicates)}; set explicit names")

        baseline = raw.get("baseline", models[0][0])
        if baseline not in names:
            raise ConfigError(f"baseline {baseline!r} names no model or published row")

        postprocess = raw.get("postprocess") or {}
        if not isinstance(postprocess, dict) or set(postprocess) - {"round_to_counts"}:
            raise ConfigError("postprocess accepts only round_to_counts")
        round_to_counts = bool(postprocess.get("round_to_counts", True))

        include_self_loops = bool(raw.get("include_self_loops", False))

        workers = raw.get("workers")
        if workers is not None:
            if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
                raise ConfigError(f"workers must be a positive integer, got {workers!r}")

        output_dir = raw.get("output_dir")

        return cls(
            raw=raw,
            digest=_canonical_digest(raw),
            base_dir=base,
            dataset_kind=dataset["kind"],
            dataset_path=base / dataset["path"],
            dataset_columns=columns,
            tess_spec=tess_spec,
            axis_spec=axis_spec,
            split_instant=split_instant,
            split_fraction=split_fraction,
            evaluation=evaluation,
            models=models,
            baseline=str(baseline),
            round_to_counts=round_to_counts,
            include_self_loops=include_self_loops,
            published_rows=published,
            workers=workers,
            output_dir=None if output_dir is None else base / output_dir,
        )

    @staticmethod
    def _check_tess_spec(spec) -> None:
        if not isinstance(spec, dict):
            raise ConfigError("tessellation section is required for this dataset kind")
        kind = spec.get("kind")
        if kind == "grid":
            missing = {"west", "south", "east", "north", "cell_size"} - set(spec)
            if missing:
                raise ConfigError(f"grid tessellation missing {sorted(missing)}")
        elif kind == "polygons":
            if "path" not in spec:
                raise ConfigError("polygon tessellation needs a path")
        else:
            raise ConfigError(f"tessellation.kind must be grid or polygons, got {kind!r}")

    @staticmethod
    def _check_axis_spec(spec) -> None:
        if not isinstance(spec, dict):
            raise ConfigError("time_axis section is required for this dataset kind")
        missing = {"origin_time", "interval_seconds", "num_intervals"} - set(spec)
        if missing:
            raise ConfigError(f"time_axis missing {sorted(missing)}")


@dataclass
class LoadedDataset:
    tess: Tessellation
    axis: TimeAxis
    tensor: ODTensor
    skipped: dict[str, int] = field(default_factory=dict)


def _build_tessellation(cfg: ExperimentConfig) -> Tessellation:
    spec = cfg.tess_spec
    assert spec is not None
    if spec["kind"] == "grid":
        region = BoundingBox(
            west=float(spec["west"]),
            south=float(spec["south"]),
            east=float(spec["east"]),
            north=float(spec["north"]),
        )
        return build_square_grid(region, float(spec["cell_size"]))
    text = (cfg.base_dir / spec["path"]).read_text("utf-8")
    return load_polygon_tessellation(text)


def _build_axis(cfg: ExperimentConfig) -> TimeAxis:
    spec = cfg.axis_spec
    assert spec is not None
    return TimeAxis(
        origin_time=_parse_instant(spec["origin_time"], "time_axis.origin_time"),
        interval_seconds=float(spec["interval_seconds"]),
        num_intervals=int(spec["num_intervals"]),
    )


def load_dataset(cfg: ExperimentConfig) -> LoadedDataset:
    """Materialize tessellation, axis, and OD tensor per the config."""
    if cfg.dataset_kind == "synthetic_dir":
        city = load_synthetic_city(cfg.dataset_path)
        return LoadedDataset(tess=city.tess, axis=city.axis, tensor=city.tensor)

    tess = _build_tessellation(cfg)
    axis = _build_axis(cfg)
    try:
        text = cfg.dataset_path.read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {cfg.dataset_path}: {exc}") from exc

    skipped: dict[str, int] = {}
    if cfg.dataset_kind == "trips":
        parsed = parse_trips(text, column_map=cfg.dataset_columns)
        result = build_od_tensor(parsed.records, tess, axis)
    else:
        parsed = parse_od_counts(text, axis, column_map=cfg.dataset_columns)
        result = build_od_tensor_from_counts(parsed.records, tess, axis)
    if parsed.rejects:
        skipped["rejected_rows"] = len(parsed.rejects)
    skipped.update(result.skipped_by_reason)
    return LoadedDataset(tess=tess, axis=axis, tensor=result.tensor, skipped=skipped)


def _resolve_split(cfg: ExperimentConfig, axis: TimeAxis) -> float:
    if cfg.split_instant is not None:
        instant = cfg.split_instant
        if not (axis.origin_time < instant < axis.end_time):
            raise ConfigError(
                f"split_instant {instant} lies outside the time axis "
                f"[{axis.origin_time}, {axis.end_time})"
            )
        return instant
    assert cfg.split_fraction is not None
    k = round(cfg.split_fraction * axis.num_intervals)
    if not (1 <= k <= axis.num_intervals - 1):
        raise ConfigError(
            f"split_fraction {cfg.split_fraction} leaves an empty side on "
            f"{axis.num_intervals} intervals"
        )
    return axis.origin_time + k * axis.interval_seconds


def resolve_workers(cfg_workers: int | None) -> int:
    """Worker count: ODFLOW_WORKERS env beats config beats a small default."""
    env = os.environ.get("ODFLOW_WORKERS")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"ODFLOW_WORKERS must be an integer, got {env!r}") from None
        if value < 1:
            raise ConfigError(f"ODFLOW_WORKERS must be >= 1, got {value}")
        return value
    if cfg_workers is not None:
        return cfg_workers
    return min(8, os.cpu_count() or 1)


def _run_origin(
    full: np.ndarray,
    origin: int,
    k: int,
    m: int,
    settings: EvalSettings,
    interval_seconds: float,
    forecast_fn,
) -> tuple[np.ndarray, int]:
    """Forecast one origin's series over the evaluation window.

    Returns the (m, n) predictions and the number of model invocations.
    """
    n = full.shape[2]
    out = np.empty((m, n), dtype=np.float64)
    window = settings.context_length
    if settings.mode == "rolling":
        for step in range(m):
            end = k + step
            lo = 0 if window is None else max(0, end - window)
            request = ForecastRequest(
                history=full[lo:end, origin, :], horizon=1, interval_seconds=interval_seconds
            )
            out[step] = forecast_fn(request).forecast[0]
        return out, m
    lo = 0 if window is None else max(0, k - window)
    request = ForecastRequest(
        history=full[lo:k, origin, :], horizon=m, interval_seconds=interval_seconds
    )
    out[:] = forecast_fn(request).forecast
    return out, 1


def _predict_model(
    name: str,
    spec: ModelSpec,
    train: ODTensor,
    eval_actual: np.ndarray,
    settings: EvalSettings,
    workers: int,
) -> tuple[np.ndarray, dict]:
    """Predicted (m, n, n) matrices for one model plus its run log."""
    k, n, _ = train.counts.shape
    m = eval_actual.shape[0]
    full = np.concatenate([train.counts, eval_actual], axis=0).astype(np.float64)
    interval_seconds = train.axis.interval_seconds

    # An all-zero training series is forecast as zero for every model;
    # skipping the fit is analytically safe and fast.
    zero_train = [i for i in range(n) if not train.counts[:, i, :].any()]
    eligible = [i for i in range(n) if train.counts[:, i, :].any()]
    predictions = np.zeros((m, n, n), dtype=np.float64)

    def run_eligible(forecast_fn, parallel: bool) -> int:
        def guarded(origin: int) -> tuple[int, np.ndarray, int]:
            try:
                block, calls = _run_origin(
                    full, origin, k, m, settings, interval_seconds, forecast_fn
                )
                return origin, block, calls
            except Exception as exc:
                raise ExperimentError(
                    f"model {name!r} failed on origin {origin}: {exc}"
                ) from exc

        total_calls = 0
        if parallel and workers > 1 and len(eligible) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for origin, block, calls in pool.map(guarded, eligible):
                    predictions[:, origin, :] = block
                    total_calls += calls
        else:
            for origin in eligible:
                origin, block, calls = guarded(origin)
                predictions[:, origin, :] = block
                total_calls += calls
        return total_calls

    if spec.kind == "external":
        params = spec.params
        config = AdapterConfig(
            command=params["command"],
            max_in_flight=params.get("max_in_flight", 1),
            handshake_timeout=params.get("handshake_timeout", 10.0),
            request_timeout=params.get("request_timeout", 60.0),
        )
        with AdapterSession(config) as session:
            calls = run_eligible(session.forecast_remote, parallel=False)
            adapter_name = (session.hello or {}).get("name")
    else:
        calls = run_eligible(lambda req: forecast_with_spec(req, spec), parallel=True)
        adapter_name = None

    log = {
        "forecast_calls": calls,
        "zero_train_origins": len(zero_train),
        "eligible_origins": len(eligible),
    }
    if adapter_name is not None:
        log["adapter_name"] = adapter_name
    return predictions, log


def _flow_arrays(matrices: np.ndarray, include_self_loops: bool) -> tuple[np.ndarray, np.ndarray]:
    work = matrices
    if not include_self_loops:
        work = matrices.copy()
        idx = np.arange(matrices.shape[1])
        work[:, idx, idx] = 0.0
    return work.sum(axis=1), work.sum(axis=2)  # inflow, outflow


def _score(predicted: np.ndarray, actual: np.ndarray, include_self_loops: bool) -> dict[str, float]:
    """All report metrics for one model: pooled, per-interval macro, flows."""
    scores = {
        "rmse_od": rmse(predicted.ravel(), actual.ravel()),
        "mae_od": mae(predicted.ravel(), actual.ravel()),
        "cpc": cpc(predicted.ravel(), actual.ravel()),
    }
    pred_in, pred_out = _flow_arrays(predicted, include_self_loops)
    act_in, act_out = _flow_arrays(actual, include_self_loops)
    scores["rmse_flows"] = rmse(
        np.concatenate([pred_in.ravel(), pred_out.ravel()]),
        np.concatenate([act_in.ravel(), act_out.ravel()]),
    )
    per_interval = [
        (
            rmse(predicted[t].ravel(), actual[t].ravel()),
            mae(predicted[t].ravel(), actual[t].ravel()),
            cpc(predicted[t].ravel(), actual[t].ravel()),
        )
        for t in range(predicted.shape[0])
    ]
    scores["rmse_od_macro"] = float(np.mean([row[0] for row in per_interval]))
    scores["mae_od_macro"] = float(np.mean([row[1] for row in per_interval]))
    scores["cpc_macro"] = float(np.mean([row[2] for row in per_interval]))
    return scores


@dataclass
class ReportRow:
    """One report line: a computed model or a published comparison row."""

    name: str
    source: str  # "computed" or "published"
    metrics: dict[str, float]
    changes_pct: dict[str, float] = field(default_factory=dict)
    claimed_change_pct: dict[str, float] = field(default_factory=dict)
    claim_flags: dict[str, str] = field(default_factory=dict)


@dataclass
class EvaluationReport:
    rows: list[ReportRow]
    baseline: str
    provenance: dict = field(default_factory=dict)

    def row(self, name: str) -> ReportRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(f"no report row named {name!r}")


def _apply_changes(rows: list[ReportRow], baseline: str) -> None:
    base = None
    for row in rows:
        if row.name == baseline:
            base = row
            break
    if base is None:
        raise ConfigError(f"baseline {baseline!r} names no report row")
    for row in rows:
        if row is base:
            continue
        for key in CHANGE_KEYS:
            if key in row.metrics and key in base.metrics and base.metrics[key] != 0:
                row.changes_pct[key] = relative_change(row.metrics[key], base.metrics[key]) * 100.0
        for key, claimed in row.claimed_change_pct.items():
            computed = row.changes_pct.get(key)
            if computed is None:
                row.claim_flags[key] = "unverifiable"
            elif abs(computed - claimed) <= CLAIM_TOLERANCE_PP:
                row.claim_flags[key] = "consistent"
            else:
                row.claim_flags[key] = "discrepant"


def build_published_report(
    published_rows: list[PublishedRow], baseline: str, provenance: dict | None = None
) -> EvaluationReport:
    """Report over published rows only: recompute and flag claimed changes."""
    if not published_rows:
        raise ConfigError("need at least one published row")
    rows = [
        ReportRow(
            name=row.name,
            source="published",
            metrics={"rmse_od": row.rmse, "mae_od": row.mae, "cpc": row.cpc},
            claimed_change_pct=dict(row.claimed_change_pct),
        )
        for row in published_rows
    ]
    _apply_changes(rows, baseline)
    return EvaluationReport(
        rows=rows, baseline=baseline, provenance=provenance or {"source": "published_rows"}
    )


def run_experiment(cfg: ExperimentConfig) -> EvaluationReport:
    """Execute the full pipeline described by the config."""
    data = load_dataset(cfg)
    split_instant = _resolve_split(cfg, data.axis)
    try:
        train, test = split_train_test(data.tensor, split_instant)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    settings = cfg.evaluation
    if settings.mode == "rolling":
        m = test.t
    else:
        if settings.horizon > test.t:
            raise ConfigError(
                f"fixed horizon {settings.horizon} exceeds the {test.t}-interval test window"
            )
        m = settings.horizon
    eval_actual = test.counts[:m]
    workers = resolve_workers(cfg.workers)

    rows: list[ReportRow] = []
    run_log: dict[str, dict] = {}
    for name, spec in cfg.models:
        predicted, log = _predict_model(name, spec, train, eval_actual, settings, workers)
        if cfg.round_to_counts:
            predicted = postprocess_counts(predicted).astype(np.float64)
        else:
            predicted = np.clip(predicted, 0.0, None)
        rows.append(
            ReportRow(
                name=name,
                source="computed",
                metrics=_score(predicted, eval_actual.astype(np.float64), cfg.include_self_loops),
            )
        )
        run_log[name] = log

    for published in cfg.published_rows:
        rows.append(
            ReportRow(
                name=published.name,
                source="published",
                metrics={
                    "rmse_od": published.rmse,
                    "mae_od": published.mae,
                    "cpc": published.cpc,
                },
                claimed_change_pct=dict(published.claimed_change_pct),
            )
        )

    _apply_changes(rows, cfg.baseline)

    provenance = {
        "config_digest": cfg.digest,
        "dataset": {"kind": cfg.dataset_kind, "path": str(cfg.dataset_path)},
        "n_tiles": data.tess.n,
        "interval_seconds": data.axis.interval_seconds,
        "train_intervals": train.t,
        "test_intervals": test.t,
        "evaluated_intervals": m,
        "evaluation": {
            "mode": settings.mode,
            "horizon": settings.horizon,
            "context_length": settings.context_length,
        },
        "round_to_counts": cfg.round_to_counts,
        "include_self_loops": cfg.include_self_loops,
        "skipped_records": data.skipped,
        "models": {
            name: json.loads(json.dumps({"kind": spec.kind, "params": spec.params}))
            for name, spec in cfg.models
        },
        "model_runs": run_log,
        "workers": workers,
    }
    return EvaluationReport(rows=rows, baseline=cfg.baseline, provenance=provenance)


# -- rendering ----------------------------------------------------------------

_CSV_COLUMNS = (
    ["model", "source"]
    + list(METRIC_KEYS)
    + [f"{key}_change_pct" for key in CHANGE_KEYS]
    + [f"claimed_{key}_change_pct" for key in PUBLISHED_KEYS]
    + [f"{key}_claim" for key in PUBLISHED_KEYS]
)

_LOWER_IS_BETTER = {
    "rmse_od": True,
    "mae_od": True,
    "cpc": False,
    "rmse_flows": True,
    "rmse_od_macro": True,
    "mae_od_macro": True,
    "cpc_macro": False,
}


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_to_csv(report: EvaluationReport) -> str:
    """Machine-readable table, fixed column order, full float precision."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for row in report.rows:
        record = {"model": row.name, "source": row.source}
        for key in METRIC_KEYS:
            record[key] = row.metrics.get(key)
        for key in CHANGE_KEYS:
            record[f"{key}_change_pct"] = row.changes_pct.get(key)
        for key in PUBLISHED_KEYS:
            record[f"claimed_{key}_change_pct"] = row.claimed_change_pct.get(key)
            record[f"{key}_claim"] = row.claim_flags.get(key)
        writer.writerow([_format_cell(record.get(col)) for col in _CSV_COLUMNS])
    return out.getvalue()


def _best_values(report: EvaluationReport) -> dict[str, float]:
    best: dict[str, float] = {}
    for key, lower in _LOWER_IS_BETTER.items():
        values = [row.metrics[key] for row in report.rows if key in row.metrics]
        if values:
            best[key] = min(values) if lower else max(values)
    return best


def report_to_markdown(report: EvaluationReport) -> str:
    """Human-readable table with the best value per metric in bold."""
    best = _best_values(report)
    lines = ["# Forecast evaluation report", ""]
    lines.append(f"Baseline row: `{report.baseline}`")
    digest = report.provenance.get("config_digest")
    if digest:
        lines.append(f"Config digest: `{digest}`")
    lines.append("")

    headers = [
        "Model",
        "Source",
        "RMSE (OD)",
        "MAE (OD)",
        "CPC",
        "RMSE (flows)",
        "RMSE change %",
        "MAE change %",
        "CPC change %",
    ]
    lines.append("| " + " | ".join(headers) + " |")
    lines.append("|" + "|".join([" --- "] * len(headers)) + "|")
    for row in report.rows:
        def metric_cell(key: str) -> str:
            value = row.metrics.get(key)
            if value is None:
                return ""
            text = f"{value:.4f}"
            return f"**{text}**" if value == best.get(key) else text

        def change_cell(key: str) -> str:
            value = row.changes_pct.get(key)
            return "" if value is None else f"{value:+.2f}%"

        cells = [
            row.name,
            row.source,
            metric_cell("rmse_od"),
            metric_cell("mae_od"),
            metric_cell("cpc"),
            metric_cell("rmse_flows"),
            change_cell("rmse_od"),
            change_cell("mae_od"),
            change_cell("cpc"),
        ]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")

    claims = [
        (row, key)
        for row in report.rows
        for key in sorted(row.claim_flags)
    ]
    if claims:
        lines.append("## Claimed changes")
        lines.append("")
        for row, key in claims:
            flag = row.claim_flags[key]
            claimed = row.claimed_change_pct[key]
            computed = row.changes_pct.get(key)
            computed_text = "n/a" if computed is None else f"{computed:+.2f}%"
            lines.append(
                f"- {row.name} {key}: computed {computed_text}, "
                f"claimed {claimed:+.2f}% -> {flag}"
            )
        lines.append("")

    macro = [row for row in report.rows if "cpc_macro" in row.metrics]
    if macro:
        lines.append("## Per-interval macro averages")
        lines.append("")
        lines.append("| Model | RMSE (macro) | MAE (macro) | CPC (macro) |")
        lines.append("| --- | --- | --- | --- |")
        for row in macro:
            lines.append(
                f"| {row.name} | {row.metrics['rmse_od_macro']:.4f} "
                f"| {row.metrics['mae_od_macro']:.4f} | {row.metrics['cpc_macro']:.4f} |"
            )
        lines.append("")
    return "\n".join(lines)


def report_to_dict(report: EvaluationReport) -> dict:
    return {
        "baseline": report.baseline,
        "provenance": report.provenance,
        "rows": [
            {
                "name": row.name,
                "source": row.source,
                "metrics": row.metrics,
                "changes_pct": row.changes_pct,
                "claimed_change_pct": row.claimed_change_pct,
                "claim_flags": row.claim_flags,
            }
            for row in report.rows
        ],
    }


def report_from_dict(data: dict) -> EvaluationReport:
    rows = [
        ReportRow(
            name=row["name"],
            source=row["source"],
            metrics=dict(row.get("metrics") or {}),
            changes_pct=dict(row.get("changes_pct") or {}),
            claimed_change_pct=dict(row.get("claimed_change_pct") or {}),
            claim_flags=dict(row.get("claim_flags") or {}),
        )
        for row in data["rows"]
    ]
    return EvaluationReport(
        rows=rows, baseline=data["baseline"], provenance=dict(data.get("provenance") or {})
    )


def save_report(report: EvaluationReport, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n", "utf-8"
    )
    return path


def load_report(path: str | Path) -> EvaluationReport:
    try:
        data = json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"report {path} is not valid JSON: {exc}") from exc
    return report_from_dict(data)


def write_report(report: EvaluationReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.json, metrics.csv, and report.md into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out / "report.json",
        "csv": out / "metrics.csv",
        "markdown": out / "report.md",
    }
    save_report(report, paths["json"])
    paths["csv"].write_text(report_to_csv(report), "utf-8")
    paths["markdown"].write_text(report_to_markdown(report), "utf-8")
    return paths
