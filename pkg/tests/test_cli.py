import csv
import json
import re
from pathlib import Path

import pytest

from wkgeom.cli import COMMANDS, SCAN_COLUMNS, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SHIPPED = [
    ("polytope-info", "simplex.toml", 0),
    ("extremal", "fubini_study.toml", 0),
    ("extremal", "soliton_extremal.toml", 0),
    ("energies", "energies.toml", 0),
    ("geodesic-scan", "geodesic_scan.toml", 0),
    ("convexity", "convexity.toml", 0),
    ("subslope", "subslope.toml", 0),
    ("epsgeo", "epsgeo.toml", 0),
    ("extremal", "power_not_positive.toml", 3),
]


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_every_command_has_a_shipped_config():
    assert {c for c, _, _ in SHIPPED} == set(COMMANDS)


@pytest.mark.parametrize("command, config, code", SHIPPED)
def test_shipped_configs(command, config, code, tmp_path, capsys):
    assert main([command, "--config", str(CONFIGS / config), "--out", str(tmp_path)]) == code
    if code:
        assert "NotPositiveOnP" in capsys.readouterr().err
        return
    stem = command.replace("-", "_")
    summary = json.loads((tmp_path / f"{stem}.json").read_text())
    for key in ("c_vw", "ell", "residual_sup", "distance", "verdicts", "provenance"):
        assert key in summary
    for v in summary["verdicts"]:
        assert re.fullmatch(r"(AC\d+|I\d+)", v["criterion"]) and v["passed"]
    with open(tmp_path / f"{stem}.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows and rows[0]


def test_fubini_study_summary(tmp_path):
    main(["extremal", "--config", str(CONFIGS / "fubini_study.toml"), "--out", str(tmp_path)])
    s = json.loads((tmp_path / "extremal.json").read_text())
    assert s["ell"]["a"] == pytest.approx(2, abs=1e-12) and s["ell"]["b"] == pytest.approx(0, abs=1e-12)
    assert s["residual_sup"] <= 1e-9 and s["c_vw"] == pytest.approx(2, abs=1e-12)


def test_scan_columns(tmp_path):
    main(["geodesic-scan", "--config", str(CONFIGS / "geodesic_scan.toml"), "--out", str(tmp_path)])
    with open(tmp_path / "geodesic_scan.csv", newline="") as fh:
        assert next(csv.reader(fh)) == SCAN_COLUMNS


SMALL = """seed = 11
[polytope]
interval = [-1.0, 1.5]
[weights.v]
family = "exponential"
params = { xi = [0.3] }
[command]
name = "energies"
draws = 3
"""


def test_idempotent_and_seeded(tmp_path):
    cfg = write(tmp_path, SMALL)
    outs = []
    for k, seed in enumerate([None, None, 12]):
        out = tmp_path / f"run{k}"
        argv = ["energies", "--config", str(cfg), "--out", str(out)]
        assert main(argv + (["--seed", str(seed)] if seed is not None else [])) == 0
        outs.append((out / "energies.csv").read_bytes())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


@pytest.mark.parametrize("text", [
    "[polytope]\ninterval = [-1.0, 1.0]\nbogus = 1\n",
    "[polytope]\ninterval = [-1.0, 1.0]\n[command]\nname = \"energies\"\ndraws = 2\nteapot = 3\n",
    "[polytope]\ninterval = [-1.0, 1.0]\n[command]\nname = \"subslope\"\ntolerance = -1e-7\n",
    "[polytope]\ninterval = [-1.0, 1.0]\n[command]\nname = \"extremal\"\n",  # wrong command
    "[polytope]\ninterval = [1.0, -1.0]\n",
    "[polytope\n",
    "[polytope]\ninterval = [-1.0, 1.0]\n[weights.v]\nfamily = \"exponential\"\nparams = {}\n",
])
def test_configuration_errors(text, tmp_path):
    assert main(["energies", "--config", str(write(tmp_path, text)), "--out", str(tmp_path)]) == 4


def test_missing_config(tmp_path):
    assert main(["energies", "--config", str(tmp_path / "nope.toml")]) == 4


def test_failed_verdict_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "[polytope]\ninterval = [-1.0, 1.0]\n[command]\nname = \"geodesic-scan\"\nsamples = 9\n")
    assert main(["geodesic-scan", "--config", str(cfg), "--out", str(tmp_path), "--tol-scale", "1e-300"]) == 2
    assert main(["geodesic-scan", "--config", str(cfg), "--out", str(tmp_path), "--tol-scale", "0"]) == 4


def test_interval_command_rejects_2d(tmp_path):
    text = (CONFIGS / "simplex.toml").read_text().replace("polytope-info", "energies")
    assert main(["energies", "--config", str(write(tmp_path, text)), "--out", str(tmp_path)]) == 4
