import math

import numpy as np
import pytest

from oracles import boettcher_series, eval_series
from qcnormal import (
    EvalBudget,
    MoebiusPower,
    PolarGrid,
    boettcher_coordinate,
    boettcher_psi,
    boettcher_uniqueness,
    covering_lift_phi,
    evaluate,
    iterate,
    normalize_leading,
    power_map,
    rescale,
)
from qcnormal.errors import BranchAmbiguity, DegenerateLeading, DomainError, WrongFixedPointClass
from qcnormal.koenigs import local_degree
from qcnormal.maps import PowerSeries, moebius_map
from qcnormal.motion import build_motion_boettcher, extend_motion_radial

GRID = PolarGrid.logspace(1e-3, 0.1, 10, 32)
G = MoebiusPower(2, 1.0)


def M(z):
    return z / (1 + z)


def test_normalize_examples():
    q2 = power_map(2)
    b, gt = normalize_leading(q2)
    assert b == 1 and gt is q2
    b, gt = normalize_leading(PowerSeries((0, 4.0)))
    assert b == pytest.approx(4.0)
    z = 1e-4 * np.exp(0.3j)
    assert evaluate(gt, z) / z**2 == pytest.approx(1, abs=1e-9)
    b, gt = normalize_leading(PowerSeries((0, 0, -8.0)))
    assert b == pytest.approx(2.828427j, abs=1e-6)
    assert gt.leading_term()[1] == pytest.approx(1, abs=1e-9)


def test_normalize_errors():
    with pytest.raises(WrongFixedPointClass):
        normalize_leading(moebius_map(0.5, 1.0))
    with pytest.raises(DegenerateLeading):
        normalize_leading(PowerSeries((0, 1e-13)))


@pytest.mark.parametrize("n", [2, 3, 5])
def test_power_map_coordinate_is_identity(n):
    res = boettcher_coordinate(power_map(n), GRID)
    assert np.allclose(res.psi.psi, GRID.nodes, rtol=1e-15, atol=0)
    assert res.psi.max_residual <= 1e-15


def test_conjugator_oracle():
    grid = PolarGrid.logspace(1e-4, 0.1, 12, 48)
    res = boettcher_coordinate(G, grid)
    assert np.abs(res.psi.psi - M(grid.nodes)).max() < 1e-8
    assert boettcher_psi(G, 0.1) == pytest.approx(0.0909091, abs=1e-7)
    assert res.psi.max_residual <= 10 * res.psi.tolerance
    assert res.max_factor_distance < 0.5


def test_series_oracle():
    b = boettcher_series([1.0, 1.0], terms=25)
    z = 0.05 * np.exp(2j * np.pi * np.arange(16) / 16)
    assert np.abs(boettcher_psi(PowerSeries((0, 1.0, 1.0)), z) - eval_series(b, z)).max() < 1e-8


def test_unnormalized_map_functional_equation():
    g = PowerSeries((0, 4.0, 1.0))
    b, _ = normalize_leading(g)
    z = 0.01 * np.exp(1j * np.linspace(0, 6, 9))
    psi = boettcher_psi(g, z)
    assert np.abs(boettcher_psi(g, evaluate(g, z)) - psi**2).max() < 1e-12
    h = 1e-6
    assert boettcher_psi(g, h) / h == pytest.approx(b, rel=1e-5)


@pytest.mark.parametrize("g", [G, PowerSeries((0, 1.0, 1.0)), PowerSeries((0, 4.0, 1.0))])
def test_rescaling_coherence(g):
    g2 = rescale(g, 2.0)
    z = 0.02 * np.exp(1j * np.linspace(0, 6, 11))
    assert np.abs(boettcher_psi(g2, z) - boettcher_psi(g, z / 2)).max() < 1e-8


def test_factor_convergence_geometric():
    z = 0.1 * np.exp(1j * np.linspace(0, 6, 7))
    for z0 in z:
        orbit = iterate(G, z0, 4)
        dist = [abs(evaluate(G, w) / w**2 - 1) for w in orbit[:-1]]
        assert all(b < 0.9 * a for a, b in zip(dist, dist[1:]))


@pytest.mark.parametrize("g", [G, MoebiusPower(3, 0.5), PowerSeries((0, 1.0, 1.0)), power_map(4)])
def test_local_degree_ratio(g):
    n = g.leading_term()[0]
    z = 1e-4 * np.exp(0.4j)
    assert math.log(abs(evaluate(g, z))) / math.log(abs(z)) == pytest.approx(n, abs=0.01)
    assert local_degree(g) == n


def test_local_degree_with_leading_coefficient():
    # the slope estimate is insensitive to a_n, the plain ratio is not
    assert local_degree(PowerSeries((0, 4.0))) == 2


def test_outside_basin_rejected():
    with pytest.raises(DomainError):
        boettcher_coordinate(PowerSeries((0, 1.0, 1.0), radius=2.0), PolarGrid.logspace(0.1, 0.7, 4, 16))


def test_branch_ambiguity():
    # g = z^2 (1 + 3z): inside the basin on |z| <= 0.4, but the first
    # factor 1 + 3z is -0.2 at z = -0.4
    g = PowerSeries((0, 1.0, 3.0))
    with pytest.raises(BranchAmbiguity):
        boettcher_coordinate(g, PolarGrid.logspace(0.1, 0.4, 4, 16))


def test_uniqueness_examples():
    res = boettcher_coordinate(G, GRID)
    assert boettcher_uniqueness(res.psi, res.psi, 2) == (0, 0.0)
    neg = type(res.psi)(**{**res.psi.__dict__, "psi": -res.psi.psi})
    idx, dev = boettcher_uniqueness(res.psi, neg, 3)
    assert idx == 1 and dev < 1e-15


def test_uniqueness_two_runs():
    a = boettcher_coordinate(G, GRID).psi
    b = boettcher_coordinate(G, PolarGrid.logspace(1e-3, 0.1, 19, 64), EvalBudget(tolerance=1e-14)).psi
    idx, dev = boettcher_uniqueness(a, b, 2)
    assert idx == 0 and dev < 1e-7


def test_covering_lift_identity():
    grid = PolarGrid.logspace(1e-3, 0.5, 8, 16)
    cg = covering_lift_phi(power_map(2), lambda z: z, 0.01, 2, grid)
    assert np.allclose(cg.phi, grid.nodes, rtol=1e-14, atol=0)
    assert cg.mismatch < 1e-16


def test_covering_lift_moebius_power():
    r, k = 0.01, 2
    c = r ** 0.5
    ms = build_motion_boettcher(G, r, c_samples=[0, c])
    bm = extend_motion_radial(ms, c_values=[c]).boundary_map(c)
    grid = PolarGrid.logspace(0.02, 0.55, 10, 32)
    cg = covering_lift_phi(G, bm, r, k, grid)
    assert cg.max_residual < 1e-8
    assert cg.mismatch < 1e-8
    # psi is the inverse of phi where that inverse exists
    ok = np.isfinite(cg.psi)
    assert ok.sum() > 100
