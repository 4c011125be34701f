"""Map germs fixing the origin.

Every map is an immutable description that can be evaluated on numpy arrays,
differentiated (analytic variants only), iterated and locally inverted.
Composite maps apply their members right to left, so ``Composite((f, g))``
is ``f o g``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import (
    DerivativeVanished,
    DomainError,
    NoConvergence,
    NotAnalytic,
    OrbitEscape,
)

# relative size below which a denominator counts as vanishing
POLE_TOL = 1e-14
_TINY = 1e-300


@dataclass(frozen=True)
class EvalBudget:
    """Finite iteration and tolerance budget shared by the iterative schemes.

    ``newton_tolerance`` bounds ``|m(z) - w|`` by ``newton_tolerance * min(1, |w|)``,
    which is never looser than the absolute bound.
    """

    max_iterations: int = 200
    tolerance: float = 1e-12
    newton_max_steps: int = 60
    newton_tolerance: float = 1e-14

    def __post_init__(self):
        if self.max_iterations <= 0 or self.newton_max_steps <= 0:
            raise ValueError("iteration caps must be positive")
        if not 0 < self.tolerance < 1:
            raise ValueError("tolerance must lie in (0, 1)")
        if self.newton_tolerance <= 0:
            raise ValueError("newton_tolerance must be positive")

    def to_dict(self):
        return {
            "max_iterations": self.max_iterations,
            "tolerance": self.tolerance,
            "newton_max_steps": self.newton_max_steps,
            "newton_tolerance": self.newton_tolerance,
        }


def _as_complex_tuple(values) -> tuple:
    return tuple(complex(v) for v in values)


def _ipow(u, n: int):
    """Integer power by repeated squaring (exact for exactly representable cases)."""
    result = np.ones_like(u)
    base = u
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def _horner(coeffs, z):
    acc = np.zeros_like(z)
    for a in reversed(coeffs):
        acc = acc * z + a
    return acc


class MapSpec:
    """Base class of all map variants."""

    variant: ClassVar[str] = ""

    # subclasses implement these on complex ndarrays; points outside the
    # domain or at a pole come back as nan
    def _eval(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _deriv(self, z: np.ndarray) -> np.ndarray:
        raise NotAnalytic(f"{self.variant} map has no complex derivative")

    def _quotient(self, z: np.ndarray, fz: np.ndarray) -> np.ndarray:
        """``f(z) / (lam z)`` for nonzero ``z``, given ``fz = f(z)``."""
        lz = complex(self.multiplier) * z
        # complex division of equal operands is not always exactly 1
        return np.where(fz == lz, 1.0, fz / lz)

    @property
    def radius(self) -> float:
        return math.inf

    @property
    def analytic(self) -> bool:
        return True

    @property
    def multiplier(self) -> complex:
        raise NotImplementedError

    def leading_term(self) -> tuple[int, complex]:
        """Return ``(n, a_n)`` with ``m(z) = a_n z**n + O(z**(n+1))``."""
        raise NotImplementedError

    def __call__(self, z):
        return evaluate(self, z)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerSeries(MapSpec):
    """Truncated series ``sum_j a_j z**j`` for j = 1..J on a declared disk."""

    coeffs: tuple
    radius: float = 1.0
    variant: ClassVar[str] = "power_series"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_complex_tuple(self.coeffs))
        if not self.coeffs:
            raise ValueError("PowerSeries needs at least one coefficient")
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def multiplier(self):
        return self.coeffs[0]

    def leading_term(self):
        for j, a in enumerate(self.coeffs, start=1):
            if a != 0:
                return j, a
        return 0, 0j

    def _eval(self, z):
        out = z * _horner(self.coeffs, z)
        out[np.abs(z) > self.radius] = np.nan
        return out

    def _quotient(self, z, fz):
        # 1 + (a_2 z + a_3 z^2 + ...) / a_1, exactly 1 for a linear map
        if len(self.coeffs) == 1:
            return np.where(np.isfinite(fz), 1.0 + 0j, np.nan)
        return 1 + z * _horner(self.coeffs[1:], z) / self.coeffs[0]

    def _deriv(self, z):
        dcoeffs = [j * a for j, a in enumerate(self.coeffs, start=1)]
        out = _horner(dcoeffs, z)
        out[np.abs(z) > self.radius] = np.nan
        return out

    def to_dict(self):
        return {
            "variant": self.variant,
            "coeffs": [_cplx_out(a) for a in self.coeffs],
            "radius": _radiusout(self.radius),
        }


@dataclass(frozen=True)
class Rational(MapSpec):
    """Quotient of polynomials given by ascending coefficient lists."""

    numerator: tuple
    denominator: tuple
    radius: float = math.inf
    variant: ClassVar[str] = "rational"

    def __post_init__(self):
        object.__setattr__(self, "numerator", _as_complex_tuple(self.numerator))
        object.__setattr__(self, "denominator", _as_complex_tuple(self.denominator))
        if not self.numerator or not self.denominator:
            raise ValueError("empty coefficient list")
        if self.numerator[0] != 0:
            raise ValueError("map must fix 0: numerator constant term must vanish")
        if self.denominator[0] == 0:
            raise ValueError("denominator must be nonzero at 0")
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def multiplier(self):
        num1 = self.numerator[1] if len(self.numerator) > 1 else 0j
        return num1 / self.denominator[0]

    def leading_term(self):
        for j, a in enumerate(self.numerator):
            if a != 0:
                return j, a / self.denominator[0]
        return 0, 0j

    def _den_scale(self):
        return max(abs(b) for b in self.denominator)

    def _eval(self, z):
        num = _horner(self.numerator, z)
        den = _horner(self.denominator, z)
        bad = (np.abs(den) <= POLE_TOL * self._den_scale()) | (np.abs(z) > self.radius)
        den = np.where(bad, 1.0, den)
        out = num / den
        out[bad] = np.nan
        return out

    def _deriv(self, z):
        num = _horner(self.numerator, z)
        den = _horner(self.denominator, z)
        dnum = _horner([j * a for j, a in enumerate(self.numerator)][1:] or [0j], z)
        dden = _horner([j * b for j, b in enumerate(self.denominator)][1:] or [0j], z)
        bad = (np.abs(den) <= POLE_TOL * self._den_scale()) | (np.abs(z) > self.radius)
        den = np.where(bad, 1.0, den)
        out = (dnum * den - num * dden) / (den * den)
        out[bad] = np.nan
        return out

    def to_dict(self):
        return {
            "variant": self.variant,
            "numerator": [_cplx_out(a) for a in self.numerator],
            "denominator": [_cplx_out(b) for b in self.denominator],
            "radius": _radiusout(self.radius),
        }


@dataclass(frozen=True)
class MoebiusPower(MapSpec):
    """``M^{-1} o q_n o M`` with ``M(z) = z/(1+cz)`` and ``q_n(z) = z**n``."""

    n: int
    c: complex = 0j
    radius: float = math.inf
    variant: ClassVar[str] = "moebius_power"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be an integer >= 1")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "c", complex(self.c))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def multiplier(self):
        return 1 + 0j if self.n == 1 else 0j

    def leading_term(self):
        return self.n, 1 + 0j

    def _parts(self, z):
        d1 = 1 + self.c * z
        bad = (np.abs(d1) <= POLE_TOL) | (np.abs(z) > self.radius)
        u = z / np.where(bad, 1.0, d1)
        v = _ipow(u, self.n)
        d2 = 1 - self.c * v
        bad |= np.abs(d2) <= POLE_TOL
        return d1, u, v, np.where(bad, 1.0, d2), bad

    def _eval(self, z):
        if self.c == 0:
            out = _ipow(z, self.n)
            out[np.abs(z) > self.radius] = np.nan
            return out
        _, _, v, d2, bad = self._parts(z)
        out = v / d2
        out[bad] = np.nan
        return out

    def _deriv(self, z):
        d1, u, _, d2, bad = self._parts(z)
        out = self.n * _ipow(u, self.n - 1) / (d1 * d1) / (d2 * d2)
        out[bad] = np.nan
        return out

    def to_dict(self):
        return {
            "variant": self.variant,
            "n": self.n,
            "c": _cplx_out(self.c),
            "radius": _radiusout(self.radius),
        }


@dataclass(frozen=True)
class Perturbed(MapSpec):
    """``base(z) + eps * base'(0) * z * conj(z) * |z|**(alpha - 1)``.

    The added term equals ``eps * base'(0) * |z|**(1 + alpha)``, a radial
    perturbation whose Beltrami coefficient behaves like ``|z|**alpha`` at 0.
    """

    base: MapSpec
    eps: complex
    alpha: float = 1.0
    variant: ClassVar[str] = "perturbed"

    def __post_init__(self):
        object.__setattr__(self, "eps", complex(self.eps))
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def radius(self):
        return self.base.radius

    @property
    def analytic(self):
        return self.eps == 0 and self.base.analytic

    @property
    def multiplier(self):
        return self.base.multiplier

    def leading_term(self):
        return self.base.leading_term()

    def _eval(self, z):
        zz = (z * np.conj(z)).real
        if self.alpha != 1:
            nz = z != 0
            zz[nz] *= np.abs(z[nz]) ** (self.alpha - 1)
        return self.base._eval(z) + self.eps * self.base.multiplier * zz

    def _deriv(self, z):
        if self.analytic:
            return self.base._deriv(z)
        raise NotAnalytic("Perturbed maps are not holomorphic; use dilatation.wirtinger")

    def to_dict(self):
        return {
            "variant": self.variant,
            "base": self.base.to_dict(),
            "eps": _cplx_out(self.eps),
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class Composite(MapSpec):
    """Composition applied right to left."""

    maps: tuple
    variant: ClassVar[str] = "composite"

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if not self.maps:
            raise ValueError("Composite needs at least one map")

    @property
    def radius(self):
        return self.maps[-1].radius

    @property
    def analytic(self):
        return all(m.analytic for m in self.maps)

    @property
    def multiplier(self):
        lam = 1 + 0j
        for m in self.maps:
            lam *= m.multiplier
        return lam

    def leading_term(self):
        n, a = 1, 1 + 0j
        for m in reversed(self.maps):
            k, b = m.leading_term()
            n, a = n * k, b * a**k
        return n, a

    def _eval(self, z):
        for m in reversed(self.maps):
            z = m._eval(z)
        return z

    def _deriv(self, z):
        d = np.ones_like(z)
        for m in reversed(self.maps):
            d = d * m._deriv(z)
            z = m._eval(z)
        return d

    def to_dict(self):
        return {"variant": self.variant, "maps": [m.to_dict() for m in self.maps]}


# -- constructors for the common germs ---------------------------------------

def power_map(n: int) -> MoebiusPower:
    """q_n(z) = z**n."""
    return MoebiusPower(n, 0j)


def linear_map(lam: complex) -> PowerSeries:
    return PowerSeries((lam,), math.inf)


def moebius_map(lam: complex, a: complex) -> Rational:
    """f(z) = lam*z / (1 + a*z)."""
    return Rational((0, lam), (1, a))


def rescale(m: MapSpec, b: complex) -> Composite:
    """Conjugate ``m`` by ``z -> b z``: returns ``z -> b * m(z / b)``."""
    return Composite((linear_map(b), m, linear_map(1 / complex(b))))


# -- operations -------------------------------------------------------------

def _as_array(z):
    arr = np.array(z, dtype=complex, copy=True)
    return arr, arr.ndim == 0


def _unwrap(out, scalar):
    return complex(out) if scalar else out


def evaluate(m: MapSpec, z):
    """Evaluate ``m`` at a point or an array of points.

    Raises DomainError when a point is outside the validity radius of the map
    (or of any stage of a composite) or lands on a pole.
    """
    arr, scalar = _as_array(z)
    arr = np.atleast_1d(arr)
    with np.errstate(all="ignore"):
        out = m._eval(arr)
    bad = ~np.isfinite(out) & np.isfinite(arr)
    if bad.any():
        worst = arr[bad].ravel()[0]
        raise DomainError(f"{m.variant} map undefined at z={worst!r} (radius {m.radius})")
    return _unwrap(out.reshape(np.shape(z)), scalar)


def derivative(m: MapSpec, z):
    """Complex derivative computed from the closed-form rules of each variant."""
    if not m.analytic:
        raise NotAnalytic(f"{m.variant} map is not holomorphic")
    arr, scalar = _as_array(z)
    arr = np.atleast_1d(arr)
    with np.errstate(all="ignore"):
        out = m._deriv(arr)
    if (~np.isfinite(out) & np.isfinite(arr)).any():
        raise DomainError("derivative undefined at requested point")
    return _unwrap(out.reshape(np.shape(z)), scalar)


def iterate(m: MapSpec, z: complex, k: int, budget: EvalBudget | None = None) -> list:
    """Forward orbit ``[z, m(z), ..., m^k(z)]``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    orbit = [complex(z)]
    for _ in range(k):
        w = orbit[-1]
        if abs(w) > m.radius:
            raise OrbitEscape(f"iterate {len(orbit) - 1} left the disk of radius {m.radius}", orbit)
        try:
            orbit.append(evaluate(m, w))
        except DomainError as exc:
            raise OrbitEscape(str(exc), orbit) from exc
    return orbit


def _jacobian_step(m: MapSpec, z, resid):
    """Newton correction solving the linearised equation at ``z``."""
    if m.analytic:
        d = m._deriv(z)
        small = ~(np.abs(d) > _TINY)
        return -resid / np.where(small, 1.0, d), small
    from .dilatation import wirtinger

    h = 1e-7 * np.maximum(np.abs(z), 1e-8)
    fz, fzbar = wirtinger(m._eval, z, h)
    det = np.abs(fz) ** 2 - np.abs(fzbar) ** 2
    small = ~(np.abs(det) > _TINY)
    det = np.where(small, 1.0, det)
    e = -resid
    return (np.conj(fz) * e - fzbar * np.conj(e)) / det, small


def local_inverse(m: MapSpec, w, seed, budget: EvalBudget | None = None):
    """Solve ``m(z) = w`` by Newton's method started at ``seed``.

    Works elementwise on arrays. Non-holomorphic maps use the real 2x2
    Jacobian assembled from finite-difference Wirtinger derivatives.
    """
    budget = budget or EvalBudget()
    w_arr, scalar = _as_array(w)
    w_arr = np.atleast_1d(w_arr)
    z = np.array(np.broadcast_to(np.asarray(seed, dtype=complex), w_arr.shape))
    thresh = budget.newton_tolerance * np.maximum(np.minimum(1.0, np.abs(w_arr)), _TINY)
    active = np.ones(w_arr.shape, dtype=bool)
    last = np.full(w_arr.shape, np.inf)
    with np.errstate(all="ignore"):
        for step in range(budget.newton_max_steps + 1):
            za = z[active]
            resid = m._eval(za) - w_arr[active]
            if not np.isfinite(resid).all():
                raise NoConvergence("Newton iterate left the domain of the map")
            err = np.abs(resid)
            last[active] = err
            done = err <= thresh[active]
            idx = np.flatnonzero(active)
            active.flat[idx[done]] = False
            if not active.any():
                break
            if step == budget.newton_max_steps:
                raise NoConvergence(
                    f"Newton did not converge in {budget.newton_max_steps} steps",
                    last_delta=float(last[active].max()),
                )
            keep = ~done
            dz, small = _jacobian_step(m, za[keep], resid[keep])
            if small.any():
                raise DerivativeVanished("derivative vanished during Newton iteration")
            z.flat[idx[keep]] = za[keep] + dz
    return _unwrap(z.reshape(np.shape(w)), scalar)


# -- serialization -----------------------------------------------------------

def _cplx_out(v) -> list:
    v = complex(v)
    return [v.real, v.imag]


def _cplx_in(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"complex number must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _radiusout(r):
    return None if math.isinf(r) else r


def _radiusin(d: dict, default=math.inf):
    # absent field -> default; explicit null -> unbounded
    if "radius" not in d:
        return default
    r = d["radius"]
    return math.inf if r is None else float(r)


def map_from_dict(d: dict) -> MapSpec:
    try:
        variant = d["variant"]
        if variant == "power_series":
            return PowerSeries([_cplx_in(a) for a in d["coeffs"]], _radiusin(d, 1.0))
        if variant == "rational":
            return Rational(
                [_cplx_in(a) for a in d["numerator"]],
                [_cplx_in(b) for b in d["denominator"]],
                _radiusin(d),
            )
        if variant == "moebius_power":
            return MoebiusPower(int(d["n"]), _cplx_in(d.get("c", 0)), _radiusin(d))
        if variant == "perturbed":
            return Perturbed(map_from_dict(d["base"]), _cplx_in(d["eps"]), float(d.get("alpha", 1.0)))
        if variant == "composite":
            return Composite(tuple(map_from_dict(x) for x in d["maps"]))
    except KeyError as exc:
        raise ValueError(f"map document missing field {exc}") from None
    raise ValueError(f"unknown map variant {d.get('variant')!r}")


def dumps_map(m: MapSpec, **kwargs) -> str:
    return json.dumps(m.to_dict(), **kwargs)


def loads_map(text: str) -> MapSpec:
    return map_from_dict(json.loads(text))


__all__ = [
    "EvalBudget",
    "MapSpec",
    "PowerSeries",
    "Rational",
    "MoebiusPower",
    "Perturbed",
    "Composite",
    "power_map",
    "linear_map",
    "moebius_map",
    "rescale",
    "evaluate",
    "derivative",
    "iterate",
    "local_inverse",
    "map_from_dict",
    "dumps_map",
    "loads_map",
]
