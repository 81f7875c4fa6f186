import json
import math
from pathlib import Path

import numpy as np
import pytest

import pyafem

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_problem_names():
    names = pyafem.problem_names()
    assert "lshape_singular" in names
    assert "square_mixed" in names


def test_run_returns_level_columns():
    out = pyafem.run(max_elements=2000)
    levels = out["levels"]
    n = len(levels["eta"])
    assert n > 3
    assert all(len(v) == n for v in levels.values())
    assert out["stop_reason"] == "element cap reached"
    assert out["initial_elements"] == 12
    etas = levels["eta"]
    assert etas[-1] < etas[0]
    assert math.isnan(levels["dist_next"][-1])
    assert "rates" in out["summary"]


def test_run_config_file():
    out = pyafem.run_config(str(CONFIGS / "lshape_zz.json"))
    assert len(out["levels"]["eta"]) > 3


def test_uniform_quadruples():
    out = pyafem.run(uniform=True, max_elements=3000)
    el = out["levels"]["elements"]
    assert all(b == 4 * a for a, b in zip(el, el[1:]))


def test_marking_and_brute_force():
    v = [4.0, 1.0, 1.0, 1.0, 1.0]
    assert pyafem.mark_greedy(v, 0.5) == [0]
    rng = np.random.default_rng(3)
    for _ in range(50):
        x = list(rng.lognormal(size=rng.integers(1, 12)))
        theta = float(rng.uniform(0.1, 0.9))
        g = pyafem.mark_greedy(x, theta)
        assert len(g) == pyafem.brute_force_doerfler(x, theta)
        assert len(pyafem.mark_binning(x, theta)) <= 2 * len(g)


def test_fit_rate_power_law():
    n = [10 * 2**k for k in range(10)]
    q = [(x - 9) ** -0.5 for x in n]
    fit = pyafem.fit_rate(n, 10, q)
    assert fit["slope"] == pytest.approx(0.5, abs=1e-12)


def test_mesh_refinement_and_arrays():
    m = pyafem.Mesh.lshape()
    assert m.num_elements == 12
    f = m.refine([0, 0, 5])
    assert f.num_elements > 12
    v, t = f.vertices, f.triangles
    assert v.shape == (f.num_vertices, 2)
    assert t.shape == (f.num_elements, 3)
    total = sum(f.area(i) for i in range(f.num_elements))
    assert total == pytest.approx(3.0)
    u = m.uniform_refine()
    assert u.num_elements == 48


def test_verify_report():
    rep = pyafem.verify(problem="square_sine", max_elements=2000)
    assert isinstance(rep, (dict, list))
    text = json.dumps(rep)
    assert "stability_A1" in text


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        pyafem.run(theta=1.5)
    with pytest.raises(ValueError):
        pyafem.run(problem="helmholtz")
