import csv
import json
import math

import numpy as np
import pytest

from lagfill import cli
from lagfill.report import ConfigError, RunConfig


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def figures(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig")
    assert cli.main(["fronts", "--out", str(out)]) == 0
    assert cli.main(["detpath", "--out", str(out)]) == 0
    return out


def test_front_outputs(figures):
    rows = _read_csv(figures / "fronts.csv")
    assert rows[0] == ["knot", "theta", "x", "z"]
    knots = [r[0] for r in rows[1:]]
    assert knots.count("K1") == knots.count("K2") == RunConfig().front_samples
    for name in ("K1", "K2"):
        svg = (figures / f"fronts_{name}.svg").read_text()
        assert svg.count("<polyline") == 1 and svg.count('class="cusp"') == 2
        assert "<title>front of" in svg


def test_csv_uses_full_precision(figures):
    rows = _read_csv(figures / "detpath.csv")
    assert rows[0] == ["s", "re", "im", "unwrapped_arg"]
    # 17 significant digits round-trip a double exactly
    assert float(rows[1][1]) == pytest.approx(125 / 105, abs=1e-15)
    assert len(rows[1][1].replace("0.", "").replace(".", "")) >= 15
    assert len(rows) == 10_002


def test_detpath_markers(figures):
    data = np.loadtxt(figures / "detpath.csv", delimiter=",", skiprows=1)
    mid = data[np.argmin(np.abs(data[:, 0] - 0.5))]
    assert mid[1:3] == pytest.approx([0.0, 22 / 7], abs=1e-12)
    assert data[0, 1] == pytest.approx(-data[-1, 1], abs=1e-12)
    assert data[0, 2] == pytest.approx(data[-1, 2], abs=1e-12)
    assert data[-1, 3] - data[0, 3] == pytest.approx(math.pi - 2 * math.atan2(136, 125), abs=1e-9)
    svg = (figures / "detpath.svg").read_text()
    assert svg.count("endpoint") == 2 and "s = 1/2" in svg


def test_outputs_are_deterministic(figures, tmp_path):
    assert cli.main(["fronts", "--out", str(tmp_path)]) == 0
    assert cli.main(["detpath", "--out", str(tmp_path)]) == 0
    for name in ("fronts.csv", "fronts_K1.svg", "fronts_K2.svg", "detpath.csv", "detpath.svg"):
        assert (tmp_path / name).read_bytes() == (figures / name).read_bytes()


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(tol=-1).validate()
    with pytest.raises(ConfigError):
        RunConfig(n=2).validate()
    with pytest.raises(ConfigError):
        RunConfig(grid=50).validate()
    assert RunConfig().validate().n == 7


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["verify", "--tol", "-1", "--out", str(tmp_path)]) == 2
    assert cli.main(["report", "--out", str(tmp_path / "missing")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["fronts", "--out", str(blocker / "sub")]) == 2
    assert "error" in capsys.readouterr().err


def test_report_roundtrip(tmp_path, capsys):
    payload = {"all_passed": True, "claims": [{"claim_id": 1, "title": "t", "passed": True}]}
    (tmp_path / "report.json").write_text(json.dumps(payload))
    assert cli.main(["report", "--out", str(tmp_path)]) == 0
    assert "[PASS] claim  1" in capsys.readouterr().out
