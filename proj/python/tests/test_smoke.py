import json
import pathlib
import subprocess

import numpy as np
import pytest

import tempfit

ROOT = pathlib.Path(__file__).resolve().parents[2]
DATA = ROOT / "tests" / "data"


def load_features(name):
    rows = np.loadtxt(DATA / f"{name}.txt", comments="#")
    return rows[:, 1:], rows[:, 0].astype(int).tolist()


def test_version():
    assert tempfit.__version__ == "0.3.0"


def test_isic_anchor():
    t = tempfit.estimate(2048, cn=8, csg=3.85, variant="csgcn")
    assert abs(t - 24.88) <= 0.02


def test_unit_baseline():
    assert tempfit.estimate(512, variant="unit") == 1.0


def test_missing_csg_raises():
    with pytest.raises(ValueError, match="csg"):
        tempfit.estimate(2048, variant="csg")


def test_custom_coefficients():
    t = tempfit.estimate(400, variant="plain", coeffs={"alpha": 1.0, "beta": 4.0})
    assert t == 24.0


def test_separable_csg_is_zero():
    x, y = load_features("separable")
    r = tempfit.compute_csg(x, y)
    assert abs(r["csg"]) <= 1e-9
    assert r["similarity"].shape == (3, 3)


def test_relabeling_keeps_csg():
    x, y = load_features("overlap3")
    moved = [(label + 1) % 3 for label in y]
    assert tempfit.compute_csg(x, y)["csg"] == tempfit.compute_csg(x, moved)["csg"]


def test_shape_mismatch_raises():
    x, y = load_features("overlap3")
    with pytest.raises(ValueError):
        tempfit.compute_csg(x, y[:-1])


def test_csg_matches_reference():
    expected = json.loads((DATA / "csg_expected.json").read_text())
    x, y = load_features("overlap3")
    got = tempfit.compute_csg(x, y)["csg"]
    assert got == pytest.approx(expected["overlap3"]["unnormalized"]["csg"], rel=1e-10)


def test_fit_planted_grid():
    r = tempfit.fit(str(ROOT / "reproduce" / "planted_grid.csv"), seed=3)
    c = r["coefficients"]
    assert abs(c["alpha"] - 0.7) <= 0.035
    assert abs(c["beta"] - 3.0) <= 0.15
    assert r["objective"] >= r["initial_best"]


def test_fit_from_dicts():
    grids = []
    for m in (64, 1024):
        peak = 0.7 * m**0.5 + 3.0
        temps = sorted({2.0 ** (j / 8) for j in range(73)} | {peak})
        samples = [(t, 100.0 * np.exp(-np.log(t / peak) ** 2)) for t in temps]
        grids.append({"condition_id": f"m{m}", "m": m, "cn": 10, "samples": samples})
    r = tempfit.fit(grids, seed=1, max_generations=300)
    assert r["objective"] == pytest.approx(200.0, rel=1e-6)


def test_parity_with_cli():
    cli = ROOT / "build" / "tools" / "tempfit"
    if not cli.exists():
        pytest.skip("command-line tool not built")
    out = subprocess.run(
        [str(cli), "estimate", "--m", "2048", "--cn", "8", "--csg", "3.85", "--format", "structured"],
        check=True, capture_output=True, text=True,
    ).stdout
    assert json.loads(out)["temperature"] == tempfit.estimate(2048, cn=8, csg=3.85)
