import math

import pytest

import galerkin_steer as gs


def test_kbar():
    assert gs.kbar(1, 1, math.pi, math.pi) == pytest.approx(-2.0)
    assert gs.kbar(2, 3, 1.0, 1.0) == pytest.approx(-13 * math.pi**2)


def test_mode_sets():
    assert [len(gs.mode_set_K(j)) for j in (1, 2, 3)] == [8, 15, 24]
    assert (3, 3) not in gs.mode_set_K(1)


def test_norm():
    assert gs.norm({(1, 1): 1.0}, math.pi, math.pi, "H") == pytest.approx(math.pi / math.sqrt(2))
    assert gs.norm({}, 1.0, 2.0, "DA") == 0.0
    with pytest.raises(Exception):
        gs.norm({(1, 1): 1.0}, 1.0, 1.0, "L9")


def test_quadratic_matches_coefficients():
    a, b = 1.0, 2.0
    q = gs.quadratic({(1, 1): 1.0, (1, 3): 1.0}, 3, a, b)
    assert q[(2, 2)] == pytest.approx(2 * a * math.pi**2 / (b * (a * a + b * b)))
    assert q[(2, 4)] == pytest.approx(-a * math.pi**2 / (b * (b * b + 4 * a * a)))
    c = gs.interaction_coeffs((1, 1), (2, 2), a, b)
    assert c["++"][1] == 0.0 and c["--"][1] == 0.0


def test_exact_delta():
    d = gs.delta_vector((1, 2), (2, 1), "1", "1")
    assert all(v == "0" for v in d.values())
    e = gs.delta_vector((1, 1), (1, 3), "1", "2")
    assert e[(2, 2)] == "8/5"


def test_verify_step():
    assert gs.verify_step(1, "1", "2")["verdict"] == "pass"
    assert gs.verify_step(1, "1", "1")["verdict"] == "fail"
    assert gs.verify_step(1, "1", "1", square_mode=True)["verdict"] == "pass"


def test_lie_rank_and_simulate():
    r = gs.lie_rank(2, 1.0, 2.0, {(1, 1): 0.3, (2, 1): -0.2})
    assert r["rank"] == 15
    end = gs.simulate(1, 1.0, 1.0, 1.0, {(1, 1): 1.0}, 0.1)
    assert end[(1, 1)] == pytest.approx(math.exp(-2 * math.pi**2 * 0.1), rel=1e-8)
