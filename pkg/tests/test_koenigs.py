import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from oracles import eval_series, koenigs_series
from qcnormal import (
    EvalBudget,
    PolarGrid,
    annulus_lift_phi,
    classify_fixed_point,
    control_condition,
    koenigs_backward,
    koenigs_coordinate,
    koenigs_forward,
    koenigs_psi,
    linear_map,
    moebius_map,
    power_map,
    rescale,
    uniqueness_check,
)
from qcnormal.errors import GridMismatch, NoConvergence, WrongFixedPointClass
from qcnormal.koenigs import ATTRACTING, NEUTRAL, REPELLING, SUPERATTRACTING
from qcnormal.maps import Perturbed, PowerSeries, Rational
from qcnormal.motion import build_motion_koenig, extend_motion_radial

GRID = PolarGrid.logspace(1e-3, 0.1, 10, 32)
MOEBIUS_CASES = [(0.5, 1.0), (0.3, -0.5), (0.5j, 1.0)]


def moebius_psi(lam, a, z):
    c = a / (lam - 1)
    return z / (1 - c * z)


def test_moebius_conjugacy_symbolic():
    lam, a, z = sp.symbols("lam a z")
    c = a / (lam - 1)
    f = lambda u: lam * u / (1 + a * u)
    psi = lambda u: u / (1 - c * u)
    assert sp.simplify(psi(f(z)) - lam * psi(z)) == 0
    # phi = psi^{-1} conjugates the other way
    phi = lambda u: u / (1 + c * u)
    assert sp.simplify(f(phi(z)) - phi(lam * z)) == 0


@pytest.mark.parametrize("m,cls,lam", [
    (moebius_map(0.5, 1.0), ATTRACTING, 0.5),
    (PowerSeries((2.0, 1.0)), REPELLING, 2.0),
    (linear_map(1j), NEUTRAL, 1j),
])
def test_classify(m, cls, lam):
    rep = classify_fixed_point(m)
    assert rep.fp_class == cls
    assert rep.multiplier == pytest.approx(lam)
    assert rep.inconclusive == (cls == NEUTRAL)


def test_classify_superattracting_degree():
    rep = classify_fixed_point(power_map(3))
    assert rep.fp_class == SUPERATTRACTING and rep.local_degree == 3


@pytest.mark.parametrize("method", ["finite-difference", "orbit-ratio"])
def test_classify_numeric_methods(method):
    rep = classify_fixed_point(moebius_map(0.5, 1.0), method=method)
    assert rep.multiplier == pytest.approx(0.5, abs=1e-6)
    assert rep.estimation_method == method


@pytest.mark.parametrize("b", [2.0, 0.3j, -1.5 + 0.5j])
def test_classify_scale_consistent(b):
    for m in (moebius_map(0.5, 1.0), PowerSeries((2.0, 1.0)), moebius_map(0.5j, 1.0)):
        r0, r1 = classify_fixed_point(m), classify_fixed_point(rescale(m, b))
        assert r1.fp_class == r0.fp_class
        assert r1.multiplier == pytest.approx(r0.multiplier, abs=1e-12)


def test_forward_linear_map():
    cg = koenigs_forward(linear_map(0.5), GRID)
    assert np.array_equal(cg.psi, GRID.nodes)
    assert cg.max_residual == 0
    assert np.all(cg.depth == 1)


@pytest.mark.parametrize("lam,a", MOEBIUS_CASES)
def test_forward_moebius_oracle(lam, a):
    grid = PolarGrid.logspace(1e-4, 0.1, 12, 48)
    cg = koenigs_forward(moebius_map(lam, a), grid)
    assert np.abs(cg.psi - moebius_psi(lam, a, grid.nodes)).max() < 1e-9
    assert cg.max_residual <= 10 * cg.tolerance
    assert cg.depth.max() <= 80


def test_forward_moebius_point_value():
    assert koenigs_psi(moebius_map(0.5, 1.0), 0.1) == pytest.approx(0.1 / 1.2, abs=1e-9)


def test_forward_series_oracle():
    b = koenigs_series([0.5, 1.0], 30)
    grid = PolarGrid.logspace(1e-3, 0.05, 8, 32)
    cg = koenigs_forward(PowerSeries((0.5, 1.0)), grid)
    assert np.abs(cg.psi - eval_series(b, grid.nodes)).max() < 1e-9


def test_normalization_on_small_ring():
    grid = PolarGrid.logspace(1e-7, 1e-2, 6, 16)
    cg = koenigs_forward(moebius_map(0.5, 1.0), grid)
    assert cg.normalization_error < 1e-6


def test_depth_monotonicity():
    m = moebius_map(0.5, 1.0)
    z = GRID.nodes.ravel()
    fz = m(z)
    lam = 0.5

    def resid(k):
        return np.abs(koenigs_psi(m, fz, depth=k) - lam * koenigs_psi(m, z, depth=k)).max()

    for k in (1, 5, 10, 20):
        assert resid(k + 5) <= resid(k)


def test_iteration_cap():
    with pytest.raises(NoConvergence) as info:
        koenigs_forward(moebius_map(0.5, 1.0), GRID, EvalBudget(max_iterations=5))
    assert info.value.last_delta > 0


def test_wrong_class():
    with pytest.raises(WrongFixedPointClass):
        koenigs_forward(power_map(2), GRID)
    with pytest.raises(WrongFixedPointClass):
        koenigs_forward(PowerSeries((2.0, 1.0)), GRID)
    with pytest.raises(WrongFixedPointClass):
        koenigs_backward(moebius_map(0.5, 1.0), GRID)


def test_backward_linear():
    cg = koenigs_backward(linear_map(2.0), GRID)
    assert np.allclose(cg.psi, GRID.nodes, atol=1e-15)


def test_backward_moebius_oracle():
    # f = 2z/(1+z): c = a/(lam-1) = 1, psi = z/(1-z)
    grid = PolarGrid.logspace(1e-3, 0.1, 8, 32)
    cg = koenigs_backward(moebius_map(2.0, 1.0), grid)
    assert np.abs(cg.psi - moebius_psi(2.0, 1.0, grid.nodes)).max() < 1e-9


def test_backward_series_oracle():
    b = koenigs_series([2.0, 1.0], 30)
    grid = PolarGrid.logspace(1e-3, 0.05, 8, 32)
    cg = koenigs_coordinate(PowerSeries((2.0, 1.0)), grid)
    assert cg.fp_class == REPELLING
    assert np.abs(cg.psi - eval_series(b, grid.nodes)).max() < 1e-9
    assert np.abs(cg.psi - np.log1p(grid.nodes)).max() < 1e-9
    assert cg.max_residual < 1e-8


def test_csv_columns():
    text = koenigs_forward(moebius_map(0.5, 1.0), GRID).to_csv()
    assert text.splitlines()[0] == "r,theta,re_psi,im_psi,depth,residual"
    assert len(text.splitlines()) == 1 + GRID.nodes.size


def test_control_condition():
    for lam in (0.3, 0.5j, -0.7):
        rep = control_condition(linear_map(lam), 0.1)
        assert rep.C_hat == 1.0 and not rep.violated
    rep = control_condition(moebius_map(0.5, 1.0), 0.1, n_max=60)
    assert rep.C_hat <= 1.3 and not rep.violated
    assert rep.C_hat >= 1


def test_control_monotone_in_delta():
    m = moebius_map(0.5, 1.0)
    values = [control_condition(m, d).C_hat for d in (0.2, 0.1, 0.05, 0.01)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_control_perturbed():
    rep = control_condition(Perturbed(linear_map(0.5), 0.1, 1.0), 0.05)
    assert not rep.violated and rep.C_hat < 1.2


def test_annulus_lift_identity():
    m = linear_map(0.5)
    grid = PolarGrid.logspace(1e-3, 0.4, 8, 16)
    cg = annulus_lift_phi(m, lambda z: z, 0.1, 2, grid)
    assert np.allclose(cg.phi, grid.nodes, rtol=1e-15, atol=0)
    assert cg.mismatch == 0


def _motion_boundary(m, r, delta):
    c = r / delta
    ms = build_motion_koenig(m, r, delta, c_samples=[0, c])
    return extend_motion_radial(ms, c_values=[c]).boundary_map(c)


def test_annulus_lift_moebius():
    m = moebius_map(0.5, 1.0)
    delta, k = 0.1, 3
    r = delta * 0.5**k
    grid = PolarGrid.logspace(1e-3, 0.09, 10, 32)
    cg = annulus_lift_phi(m, _motion_boundary(m, r, delta), r, k, grid)
    assert cg.mismatch < 1e-10
    assert cg.max_residual < 1e-9
    # the grid reaches rings on both sides of the fundamental annulus
    assert cg.depth.min() == -k and cg.depth.max() > 0


def test_annulus_lift_uniqueness():
    m = moebius_map(0.5, 1.0)
    delta, k = 0.1, 10
    r = delta * 0.5**k
    grid = PolarGrid.logspace(1e-3, 0.05, 10, 32)
    lift = annulus_lift_phi(m, _motion_boundary(m, r, delta), r, k, grid)
    ref = koenigs_forward(m, grid)
    ratio, dev = uniqueness_check(ref, lift)
    assert dev < 1e-3
    assert ratio == pytest.approx(1, abs=1e-3)


def test_uniqueness_examples():
    cg = koenigs_forward(moebius_map(0.5, 1.0), GRID)
    scaled = type(cg)(**{**cg.__dict__, "psi": 3 * cg.psi})
    ratio, dev = uniqueness_check(cg, scaled)
    assert ratio == pytest.approx(3, abs=1e-14) and dev < 1e-15
    other = koenigs_forward(
        moebius_map(0.5, 1.0),
        PolarGrid.logspace(1e-3, 0.1, 19, 64),
        EvalBudget(tolerance=1e-13),
    )
    assert uniqueness_check(cg, other)[1] < 1e-8


def test_uniqueness_grid_mismatch():
    a = koenigs_forward(moebius_map(0.5, 1.0), GRID)
    b = koenigs_forward(moebius_map(0.5, 1.0), PolarGrid.logspace(2e-3, 0.07, 10, 32))
    with pytest.raises(GridMismatch):
        uniqueness_check(a, b)


@given(st.floats(0.05, 0.95), st.floats(0, 2 * np.pi), st.floats(0.01, 1.0))
def test_control_constant_is_exactly_one_for_linear_maps(rho, theta, delta):
    rep = control_condition(linear_map(rho * np.exp(1j * theta)), delta)
    assert rep.C_hat == 1.0
