import math

import pytest

import ppde


def ramp(grid, k, x):
    values = [x * min(j, k) / k for j in range(grid.cells + 1)]
    return ppde.PointInTheta(grid.time(k), ppde.DiscretePath(grid, values, stop=k))


def test_distance_symmetry_and_sup_comparison():
    g = ppde.Grid(1.0, 16)
    a, b = ramp(g, 8, 0.7), ramp(g, 12, -0.4)
    assert ppde.distance(a, b, 3) == ppde.distance(b, a, 3)
    assert ppde.distance(a, b, 3) <= 2 ** (1 / 3) * ppde.distance(a, b) + 1e-12
    assert ppde.distance(a, a, 3) == 0.0


def test_regularization_sandwich():
    g = ppde.Grid(1.0, 32)
    u = ppde.catalog_functional("terminal-tanh")
    th = ramp(g, 16, 0.5)
    sub = ppde.regularize(u, 8, th, sub=True)
    sup = ppde.regularize(u, 8, th, sub=False)
    assert sub["value"] >= u(th) - sub["gap"]
    assert sup["value"] <= u(th) + sup["gap"]


def test_sup_expectation_of_terminal_value():
    assert ppde.sup_expectation(1.0, 1.0, 4, "B_T") == pytest.approx(1.0, abs=1e-12)
    assert ppde.sup_expectation(1.0, 1.0, 4, "B_T", sup=False) == pytest.approx(-1.0, abs=1e-12)


def test_control_value_example():
    v, se = ppde.control_value("vol-square")
    assert se == 0.0
    assert abs(v - 2.25) <= 0.02 * 2.25


def test_config_validation():
    assert ppde.validate_config(ppde.default_config_text()) == []
    diags = ppde.validate_config("[regularization]\na = 0.1\n")
    assert diags and diags[0][0] == 2 and diags[0][1] == "a"
    assert any(d[1] == "p" for d in ppde.validate_config("[path_space]\np = 4\n"))
    with pytest.raises(ValueError):
        ppde.run_suite("power-inequality", "[path_space]\np = 4\n")


def test_run_suite():
    rep = ppde.run_suite("power-inequality", "[regularization]\npower_samples = 2000\n")
    assert rep["pass"]
    assert rep["criterion"] == 7
    assert "power_inequality.csv" in rep["tables"]
    assert all(math.isfinite(c["measured"]) for c in rep["checks"])
