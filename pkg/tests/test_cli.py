import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

import qmac.cli
import qmac.validation
from qmac import __version__
from qmac.cli import EXIT_CHECK_FAILED, EXIT_OK, EXIT_PHYSICALITY, EXIT_VALIDATION, fmt, main
from qmac.exceptions import PhysicalityError
from qmac.validation import CheckResult

EXAMPLES = Path(__file__).resolve().parents[1] / "examples" / "configs"

SMALL_SWEEP = {
    "schema": 1,
    "scenario": {"eta": [0.5, 0.5], "tau": 0.01, "n_b": 20, "n_s": [0.01, 0.01]},
    "tasks": [
        {
            "type": "sweep",
            "parameter": "n_s",
            "grid": {"logspace": [1e-3, 1e-1, 3]},
            "constraint": {"snr": 0.1},
            "ratios": ["inf", 1],
            "series": ["tmsv", {"receiver": {"kind": "serial-pcr"}}],
        }
    ],
    "output": {"formats": ["csv", "json"], "normalize": True},
}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_version(capsys):
    assert main(["version"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == f"qmac {__version__}"


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "qmac", "version"], capture_output=True, text=True, check=True)
    assert out.stdout.startswith("qmac ")


def test_fmt_is_17_significant_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(1.0) == "1"
    assert float(fmt(1 / 3)) == 1 / 3


def test_empty_task_list_writes_manifest_only(tmp_path):
    out = tmp_path / "o"
    assert main(["run", str(EXAMPLES / "empty.json"), "--out", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json"]
    man = json.loads((out / "manifest.json").read_text())
    assert man["files"] == ["manifest.json"] and man["regions"] == []


def test_region_run_schema_and_normalisation(tmp_path):
    out = tmp_path / "o"
    assert main(["run", str(EXAMPLES / "regions-microwave-unequal-eta.json"), "--out", str(out)]) == EXIT_OK
    regions = _rows(out / "regions.csv")
    assert regions[0] == ["region_label", "subset_bitmask", "bound_bits"]
    assert {r[0] for r in regions[1:]} == {"coherent", "classical-outer", "ea-outer", "tmsv"}
    assert len(regions) == 1 + 4 * 3
    verts = _rows(out / "vertices2d.csv")
    assert verts[0] == ["region_label", "x", "y"]
    coh = [r for r in verts[1:] if r[0] == "coherent"]
    assert ["coherent", "1", "0"] in coh and ["coherent", "0", "1"] in coh
    assert (out / "regions.svg").read_text().startswith("<svg")
    man = json.loads((out / "manifest.json").read_text())
    assert man["version"] == __version__
    assert "opar_gain" in man["adopted_readings"] and "gaussian_mean" in man["adopted_readings"]
    assert set(man["files"]) == {p.name for p in out.iterdir()}


def test_three_sender_run_writes_mesh(tmp_path):
    out = tmp_path / "o"
    assert main(["run", str(EXAMPLES / "regions-three-sender.json"), "--out", str(out)]) == EXIT_OK
    assert _rows(out / "vertices3d.csv")[0] == ["region_label", "vertex", "x", "y", "z"]
    assert _rows(out / "facets3d.csv")[0] == ["region_label", "v0", "v1", "v2"]


def test_csvs_are_byte_identical_across_runs_and_workers(tmp_path):
    cfg = _write(tmp_path, {**SMALL_SWEEP, "tasks": SMALL_SWEEP["tasks"] + [
        {"type": "regions", "regions": ["tmsv"]},
        {"type": "receivers", "receivers": [{"kind": "parallel-opar", "n_r": 50}]},
    ]})
    outs = []
    for i, workers in enumerate(("1", "1", "2")):
        out = tmp_path / f"o{i}"
        assert main(["run", cfg, "--out", str(out), "--workers", workers]) == EXIT_OK
        outs.append(out)
    for name in ("regions.csv", "vertices2d.csv", "sweep.csv"):
        blobs = {(o / name).read_bytes() for o in outs}
        assert len(blobs) == 1, name


def test_sweep_schema_and_constraint(tmp_path):
    out = tmp_path / "o"
    assert main(["run", _write(tmp_path, SMALL_SWEEP), "--out", str(out)]) == EXIT_OK
    rows = _rows(out / "sweep.csv")
    assert rows[0] == ["sweep_param", "value", "series_label", "rate_bits", "normalized_rate"]
    body = rows[1:]
    assert len(body) == 3 * 2 * 2
    assert {r[0] for r in body} == {"n_s"}
    assert float(body[0][1]) == pytest.approx(1e-3)
    for r in body:
        assert float(r[4]) > 0 and float(r[3]) > 0
    man = json.loads((out / "manifest.json").read_text())
    entries = [e for e in man["sweeps"]["sweep"] if e["series"] == "serial-pcr"]
    # N_R tau N_S / N_B = 0.1 fixes N_R at each grid point
    assert [e["n_r"] for e in entries] == [200_000, 20_000, 2_000]
    assert {r[2] for r in body} == {"tmsv R1/R2=inf", "tmsv R1/R2=1", "serial-pcr R1/R2=inf", "serial-pcr R1/R2=1"}


def test_env_workers(tmp_path, monkeypatch):
    cfg = str(EXAMPLES / "empty.json")
    monkeypatch.setenv("QMAC_WORKERS", "2")
    assert main(["run", cfg, "--out", str(tmp_path / "a")]) == EXIT_OK
    monkeypatch.setenv("QMAC_WORKERS", "many")
    assert main(["run", cfg, "--out", str(tmp_path / "b")]) == EXIT_VALIDATION
    monkeypatch.setenv("QMAC_WORKERS", "0")
    assert main(["run", cfg, "--out", str(tmp_path / "c")]) == EXIT_VALIDATION


@pytest.mark.parametrize(
    "mutate",
    [
        lambda c: c.update(colour=1),
        lambda c: c["tasks"][0].update(grid=[1e-3, 1e-2, 5e-3]),
        lambda c: c["tasks"][0]["grid"].update(logspace=[-1, 1, 3]),
        lambda c: c["tasks"][0].update(grid=[1e-3, 1e-3]),
        lambda c: c["tasks"][0].update(parameter="n_r"),
        lambda c: c["output"].update(formats=["xlsx"]),
        lambda c: c["scenario"].update(eta=[0.5, 0.6]),
        lambda c: c["tasks"][0]["series"].append({"receiver": {"kind": "serial-pcr", "stats": "exact"}}),
        lambda c: c["tasks"].append({"type": "fit"}),
    ],
    ids=["unknown-field", "non-monotone-grid", "negative-logspace", "repeated-grid", "n_r-with-snr", "format",
         "eta-sum", "exact-pcr", "task-type"],
)
def test_invalid_configs_exit_2(tmp_path, mutate, capsys):
    cfg = json.loads(json.dumps(SMALL_SWEEP))
    mutate(cfg)
    assert main(["run", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION
    assert "invalid input" in capsys.readouterr().err


def test_unreadable_configs_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["run", str(bad)]) == EXIT_VALIDATION
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_VALIDATION
    assert main(["run", str(EXAMPLES / "empty.json"), "--workers", "0"]) == EXIT_VALIDATION


def test_physicality_error_exits_3(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise PhysicalityError("symplectic eigenvalue 0.5 below 1")

    monkeypatch.setattr(qmac.cli, "execute", boom)
    cfg = _write(tmp_path, SMALL_SWEEP)
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == EXIT_PHYSICALITY
    assert "symplectic" in capsys.readouterr().err


def test_validate_exit_codes(monkeypatch, capsys):
    bad = [CheckResult("g-values", False, 1.0, 1e-12, "forced")]
    monkeypatch.setattr(qmac.validation, "run_checks", lambda fast=False: bad)
    assert main(["validate", "--fast"]) == EXIT_CHECK_FAILED
    assert "FAIL" in capsys.readouterr().out
    ok = [CheckResult("g-values", True, 0.0, 1e-12)]
    monkeypatch.setattr(qmac.validation, "run_checks", lambda fast=False: ok)
    assert main(["validate"]) == EXIT_OK


def test_validate_fast_runs_clean(capsys):
    assert main(["validate", "--fast"]) == EXIT_OK
    assert "FAIL" not in capsys.readouterr().out
