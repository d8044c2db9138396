from __future__ import annotations

import json
import subprocess
import sys

import pytest

from odflow.cli import main

CLEAN_GEOJSON = json.dumps(
    {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"id": "a"},
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]],
                },
            },
            {
                "type": "Feature",
                "properties": {"id": "b"},
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[1, 0], [2, 0], [2, 1], [1, 1], [1, 0]]],
                },
            },
        ],
    }
)

OVERLAP_GEOJSON = CLEAN_GEOJSON.replace(
    "[[[1, 0], [2, 0], [2, 1], [1, 1], [1, 0]]]",
    "[[[0.5, 0], [1.5, 0], [1.5, 1], [0.5, 1], [0.5, 0]]]",
)


def stderr_error(capsys) -> dict:
    err = capsys.readouterr().err.strip()
    payload = json.loads(err)
    assert set(payload) == {"error", "message"}
    return payload


def write_config(tmp_path, city_dir, **overrides) -> str:
    raw = {
        "dataset": {"kind": "synthetic_dir", "path": str(city_dir)},
        "split_fraction": 0.5,
        "models": [{"kind": "persistence"}],
        **overrides,
    }
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(raw), "utf-8")
    return str(path)


@pytest.fixture()
def city_dir(tmp_path):
    target = tmp_path / "city"
    rc = main(
        ["synth", "--out", str(target), "--seed", "3", "--tiles", "4",
         "--days", "2", "--interval-seconds", "21600"]
    )
    assert rc == 0
    return target


def test_synth_writes_city_files(tmp_path, capsys):
    target = tmp_path / "city"
    rc = main(["synth", "--out", str(target), "--seed", "1", "--tiles", "4", "--days", "2"])
    out = capsys.readouterr().out
    assert rc == 0
    for name in ("city.json", "trips.csv", "truth_tensor.csv"):
        assert (target / name).exists()
        assert name in out
    assert "total trips:" in out


def test_run_via_out_flag(tmp_path, city_dir, capsys):
    config = write_config(tmp_path, city_dir)
    out_dir = tmp_path / "results"
    rc = main(["run", "--config", config, "--out", str(out_dir)])
    out = capsys.readouterr().out
    assert rc == 0
    assert (out_dir / "report.json").exists()
    assert (out_dir / "metrics.csv").exists()
    assert (out_dir / "report.md").exists()
    assert out.count("wrote ") == 3
    csv_lines = (out_dir / "metrics.csv").read_text("utf-8").strip().split("\n")
    assert len(csv_lines) == 2
    assert csv_lines[1].startswith("persistence,computed,")


def test_run_uses_config_output_dir(tmp_path, city_dir):
    config = write_config(tmp_path, city_dir, output_dir="from_config")
    rc = main(["run", "--config", config])
    assert rc == 0
    assert (tmp_path / "from_config" / "report.json").exists()


def test_run_without_any_output_dir_fails(tmp_path, city_dir, capsys):
    config = write_config(tmp_path, city_dir)
    rc = main(["run", "--config", config])
    assert rc == 1
    payload = stderr_error(capsys)
    assert payload["error"] == "config"
    assert "--out" in payload["message"]


def test_run_missing_config_file(tmp_path, capsys):
    rc = main(["run", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path)])
    assert rc == 1
    assert stderr_error(capsys)["error"] == "config"


def test_run_invalid_config_key(tmp_path, city_dir, capsys):
    config = write_config(tmp_path, city_dir, bogus=1)
    rc = main(["run", "--config", config, "--out", str(tmp_path / "x")])
    assert rc == 1
    payload = stderr_error(capsys)
    assert payload["error"] == "config"
    assert "bogus" in payload["message"]


def test_validate_tess_grid_ok(capsys):
    rc = main(["validate-tess", "--grid", "0", "0", "2", "2", "1"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "4 tiles: valid tessellation" in out


def test_validate_tess_clean_geojson(tmp_path, capsys):
    path = tmp_path / "tiles.geojson"
    path.write_text(CLEAN_GEOJSON, "utf-8")
    rc = main(["validate-tess", "--geojson", str(path)])
    assert rc == 0
    assert "valid tessellation" in capsys.readouterr().out


def test_validate_tess_overlap_exits_2(tmp_path, capsys):
    path = tmp_path / "tiles.geojson"
    path.write_text(OVERLAP_GEOJSON, "utf-8")
    rc = main(["validate-tess", "--geojson", str(path)])
    out = capsys.readouterr().out
    assert rc == 2
    assert "overlap" in out


def test_validate_tess_malformed_geojson(tmp_path, capsys):
    path = tmp_path / "tiles.geojson"
    path.write_text("{not geojson", "utf-8")
    rc = main(["validate-tess", "--geojson", str(path)])
    assert rc == 1
    assert stderr_error(capsys)["error"] == "tessellation"


def test_validate_tess_requires_a_source(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["validate-tess"])
    assert exc.value.code == 2
    assert "required" in capsys.readouterr().err


def test_report_rerenders_saved_json(tmp_path, city_dir, capsys):
    config = write_config(tmp_path, city_dir)
    first = tmp_path / "first"
    assert main(["run", "--config", config, "--out", str(first)]) == 0
    second = tmp_path / "second"
    rc = main(["report", "--report", str(first / "report.json"), "--out", str(second)])
    assert rc == 0
    assert (second / "metrics.csv").read_bytes() == (first / "metrics.csv").read_bytes()
    assert (second / "report.md").read_bytes() == (first / "report.md").read_bytes()


def test_report_missing_file(tmp_path, capsys):
    rc = main(["report", "--report", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert rc == 1
    assert stderr_error(capsys)["error"] == "config"


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_module_and_script_entry_points(tmp_path):
    module = subprocess.run(
        [sys.executable, "-m", "odflow", "--version"], capture_output=True, text=True
    )
    assert module.returncode == 0
    assert module.stdout.startswith("odflow ")
    script = subprocess.run(
        [sys.executable, "-m", "odflow", "validate-tess", "--grid", "0", "0", "1", "1", "1"],
        capture_output=True,
        text=True,
    )
    assert script.returncode == 0
    assert "valid tessellation" in script.stdout
