import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcnormal import (
    Composite,
    EvalBudget,
    MoebiusPower,
    Perturbed,
    PowerSeries,
    Rational,
    derivative,
    dumps_map,
    evaluate,
    iterate,
    linear_map,
    loads_map,
    local_inverse,
    moebius_map,
    power_map,
    rescale,
)
from qcnormal.errors import DomainError, NotAnalytic, OrbitEscape

F = moebius_map(0.5, 1.0)

ALL_MAPS = [
    F,
    PowerSeries((0.5, 1.0, -0.3j)),
    Rational((0, 0.3), (1, -0.5)),
    MoebiusPower(2, 1.0),
    MoebiusPower(1, 0.5),
    Perturbed(linear_map(0.5), 0.1, 1.0),
    Perturbed(F, 0.2j, 0.5),
    Composite((F, power_map(2))),
]


@pytest.mark.parametrize("m", ALL_MAPS, ids=lambda m: m.variant)
def test_zero_is_fixed_exactly(m):
    assert evaluate(m, 0) == 0


def test_moebius_value():
    assert evaluate(F, 0.1) == pytest.approx(0.05 / 1.1, abs=1e-15)


def test_perturbed_value():
    m = Perturbed(PowerSeries((0.5,)), 0.1, 1.0)
    assert evaluate(m, 0.2) == pytest.approx(0.102, abs=1e-15)


def test_perturbed_alpha_one_formula():
    base = PowerSeries((0.5, 0.2))
    m = Perturbed(base, 0.3 - 0.1j, 1.0)
    z = 0.3 + 0.2j
    assert evaluate(m, z) == pytest.approx(evaluate(base, z) + (0.3 - 0.1j) * 0.5 * z * z.conjugate(), abs=1e-15)


def test_iterate_examples():
    orbit = iterate(F, 0.1, 2)
    assert orbit[0] == 0.1
    assert orbit[1] == pytest.approx(0.0454545454545, abs=1e-12)
    assert orbit[2] == pytest.approx(1 / 46, abs=1e-12)
    assert iterate(F, 0.3 + 0.1j, 0) == [0.3 + 0.1j]
    assert iterate(power_map(2), 0.5, 3) == [0.5, 0.25, 0.0625, 0.00390625]


def test_iterate_escape():
    m = PowerSeries((2.0,), radius=1.0)
    with pytest.raises(OrbitEscape) as info:
        iterate(m, 0.3, 5)
    assert len(info.value.orbit) >= 2


@given(st.floats(0.01, 0.5), st.floats(0, 2 * math.pi), st.integers(0, 6), st.integers(0, 6))
def test_iterate_semigroup(rho, th, j, k):
    z = rho * complex(math.cos(th), math.sin(th))
    long = iterate(F, z, j + k)
    tail = iterate(F, long[j], k)
    assert np.allclose(long[j:], tail, atol=1e-14, rtol=0)


def test_local_inverse_examples():
    assert local_inverse(linear_map(0.5), 0.05, 0.1) == pytest.approx(0.1, abs=1e-15)
    assert local_inverse(F, evaluate(F, 0.1), 0.05) == pytest.approx(0.1, abs=1e-12)
    assert local_inverse(power_map(2), 0.04, 0.19) == pytest.approx(0.2, abs=1e-14)


@given(st.floats(0.01, 0.4), st.floats(0, 2 * math.pi))
def test_local_inverse_roundtrip(rho, th):
    z = rho * complex(math.cos(th), math.sin(th))
    budget = EvalBudget()
    for m in (F, PowerSeries((2.0, 1.0)), Rational((0, 0.3), (1, -0.5))):
        back = local_inverse(m, evaluate(m, z), z, budget)
        assert abs(evaluate(m, back) - evaluate(m, z)) <= budget.newton_tolerance
        assert abs(back - z) < 1e-12


def test_local_inverse_nonanalytic():
    m = Perturbed(linear_map(0.5), 0.1, 1.0)
    z = 0.2 - 0.1j
    assert local_inverse(m, evaluate(m, z), 0.19 - 0.1j) == pytest.approx(z, abs=1e-12)


def test_derivative_examples():
    assert derivative(F, 0) == pytest.approx(0.5)
    assert derivative(power_map(3), 0) == 0
    assert derivative(MoebiusPower(1, 0.7), 0) == pytest.approx(1.0)
    with pytest.raises(NotAnalytic):
        derivative(Perturbed(F, 0.1), 0.1)


@pytest.mark.parametrize("m", [mm for mm in ALL_MAPS if mm.analytic], ids=lambda m: m.variant)
def test_derivative_matches_central_difference(m):
    z = np.array([0.05 + 0.02j, -0.1j, 0.2, 0.13 - 0.07j])
    h = 1e-6
    fd = (evaluate(m, z + h) - evaluate(m, z - h)) / (2 * h)
    d = derivative(m, z)
    assert np.all(np.abs(fd - d) <= 1e-6 * np.maximum(np.abs(d), 1e-3))


def test_domain_errors():
    with pytest.raises(DomainError):
        evaluate(PowerSeries((0.5, 1.0), radius=0.2), 0.3)
    with pytest.raises(DomainError):
        evaluate(F, -1.0)


def test_composite_single_is_identity_wrapper():
    z = np.array([0.1, 0.2j, -0.05 + 0.03j])
    for m in ALL_MAPS:
        assert np.array_equal(evaluate(Composite((m,)), z), evaluate(m, z))


def test_composite_order_right_to_left():
    m = Composite((linear_map(3.0), power_map(2)))
    assert evaluate(m, 0.2) == pytest.approx(3 * 0.04)


def test_moebius_power_is_conjugated_power():
    m = MoebiusPower(2, 1.0)
    z = 0.1 + 0.05j
    M = lambda u: u / (1 + u)
    Minv = lambda v: v / (1 - v)
    assert evaluate(m, z) == pytest.approx(Minv(M(z) ** 2), abs=1e-15)


def test_leading_terms():
    assert power_map(3).leading_term() == (3, 1)
    n, a = rescale(PowerSeries((0, 4.0)), 4.0).leading_term()
    assert n == 2 and a == pytest.approx(1.0)
    assert F.multiplier == 0.5


@pytest.mark.parametrize("m", ALL_MAPS, ids=lambda m: m.variant)
def test_serialization_roundtrip(m):
    text = dumps_map(m)
    back = loads_map(text)
    z = np.array([0.05, 0.1j, -0.07 + 0.02j])
    assert np.array_equal(evaluate(back, z), evaluate(m, z))
    assert dumps_map(back) == text


def test_serialization_uses_pairs_for_complex():
    import json

    d = json.loads(dumps_map(PowerSeries((0.5j, 1.0))))
    assert d["variant"] == "power_series"
    assert d["coeffs"][0] == [0.0, 0.5]


def test_budget_validation():
    with pytest.raises(ValueError):
        EvalBudget(tolerance=1.5)
    with pytest.raises(ValueError):
        EvalBudget(max_iterations=0)
