"""Beltrami coefficients, asymptotic-conformality moduli and related bounds.

The modulus ``omega(t)`` is the sup of ``|mu|`` over the disk of radius ``t``.
Between sampled thresholds it is interpolated as a piecewise power law
(linear in log-log coordinates) and below the first threshold it follows a
power law anchored at the first sample whose exponent is fitted on the
smallest decade. Integrals of ``omega(s)/s`` are computed exactly for that
interpolant, which keeps the series/integral comparison below consistent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import (
    DegenerateInput,
    ExtrapolationNeeded,
    FitFailed,
    OutOfRange,
    TooManyInvalidNodes,
)
from .export import csv_text
from .grids import PolarGrid
from .maps import MapSpec, evaluate

# head exponents at or below this flag a divergent integral at 0+
DIVERGENCE_EXPONENT = 0.01
DEFAULT_NOISE_FLOOR = 1e-8


def _evaluator(f) -> Callable:
    if isinstance(f, MapSpec):
        return lambda z: evaluate(f, z)
    return f


def wirtinger(f, z, h):
    """Central-difference Wirtinger derivatives ``(f_z, f_zbar)``.

    Uses the four points ``z +- h`` and ``z +- i h``; the error is O(h**2).
    ``f`` is a MapSpec or any callable acting on complex arrays.
    """
    f = _evaluator(f)
    z = np.asarray(z, dtype=complex)
    h = np.asarray(h, dtype=float)
    dx = (f(z + h) - f(z - h)) / (2 * h)
    dy = (f(z + 1j * h) - f(z - 1j * h)) / (2j * h)
    fz = 0.5 * dx + 0.5 * dy
    fzbar = 0.5 * dx - 0.5 * dy
    if fz.ndim == 0:
        return complex(fz), complex(fzbar)
    return fz, fzbar


@dataclass(frozen=True)
class BeltramiField:
    """Samples of ``mu = f_zbar / f_z`` on a polar grid.

    Invalid nodes (``|f_z| < 10 h`` or ``|mu| >= 1``) hold nan and are
    excluded from every sup.
    """

    grid: PolarGrid
    mu: np.ndarray
    fd_step: float
    n_invalid: int
    n_not_qc: int = 0

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.mu)

    @property
    def abs_mu(self) -> np.ndarray:
        return np.abs(self.mu)

    def sup(self) -> float:
        vals = self.abs_mu[self.valid]
        return float(vals.max()) if vals.size else 0.0

    def to_csv(self) -> str:
        g = self.grid
        r = np.repeat(g.r, g.angles_per_ring)
        th = np.tile(g.thetas, len(g.radii))
        mu = self.mu.ravel()
        return csv_text(["r", "theta", "re_mu", "im_mu", "abs_mu"], [r, th, mu.real, mu.imag, np.abs(mu)])


def beltrami_field(m, grid: PolarGrid, h: float | None = None, max_invalid_fraction=0.01) -> BeltramiField:
    """Estimate the Beltrami coefficient of ``m`` at every grid node."""
    if h is None:
        h = 1e-5 * grid.outer_radius
    z = grid.nodes
    fz, fzbar = wirtinger(m, z, h)
    with np.errstate(all="ignore"):
        mu = fzbar / fz
    invalid = ~(np.abs(fz) >= 10 * h) | ~np.isfinite(mu)
    not_qc = ~invalid & (np.abs(mu) >= 1)
    mu = np.where(invalid | not_qc, np.nan, mu)
    bad = int(invalid.sum()) + int(not_qc.sum())
    if bad > max_invalid_fraction * mu.size:
        raise TooManyInvalidNodes(f"{bad} of {mu.size} nodes invalid (|f_z| tiny or |mu| >= 1)")
    return BeltramiField(grid, mu, float(h), int(invalid.sum()), int(not_qc.sum()))


@dataclass(frozen=True)
class ModulusCurve:
    """Nondecreasing samples of ``omega`` and the value of ``int_0^tmax omega(s)/s ds``."""

    thresholds: np.ndarray
    omega: np.ndarray
    head_exponent: float
    integral_value: float

    @property
    def divergent(self) -> bool:
        return math.isinf(self.integral_value)

    @property
    def t_max(self) -> float:
        return float(self.thresholds[-1])

    @classmethod
    def from_samples(cls, thresholds, omega, noise_floor=0.0) -> "ModulusCurve":
        t = np.asarray(thresholds, dtype=float)
        w = np.asarray(omega, dtype=float)
        if t.ndim != 1 or t.size < 2 or t.shape != w.shape:
            raise ValueError("need at least two (t, omega) samples")
        if t[0] <= 0 or np.any(np.diff(t) <= 0):
            raise ValueError("thresholds must be positive and increasing")
        w = np.where(w < noise_floor, 0.0, w)
        w = np.maximum.accumulate(w)
        beta = _head_exponent(t, w)
        curve = cls(t, w, beta, 0.0)
        object.__setattr__(curve, "integral_value", curve.integral(t[-1]))
        return curve

    @classmethod
    def from_function(cls, omega: Callable, thresholds) -> "ModulusCurve":
        t = np.asarray(thresholds, dtype=float)
        return cls.from_samples(t, omega(t))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s > self.t_max * (1 + 1e-12)):
            raise ExtrapolationNeeded(f"omega requested beyond sampled range t_max={self.t_max}")
        t, w = self.thresholds, self.omega
        out = np.zeros(s.shape)
        head = s < t[0]
        pos = head & (s > 0)
        if np.any(pos):
            beta = max(self.head_exponent, 0.0) if math.isfinite(self.head_exponent) else 0.0
            if w[0] > 0:
                out[pos] = w[0] * (s[pos] / t[0]) ** beta
        body = ~head
        if np.any(body):
            sb = np.minimum(s[body], t[-1])
            i = np.clip(np.searchsorted(t, sb, side="right") - 1, 0, t.size - 2)
            w0, w1 = w[i], w[i + 1]
            u = np.log(sb / t[i]) / np.log(t[i + 1] / t[i])
            with np.errstate(divide="ignore", invalid="ignore"):
                lw0, lw1 = np.log(w0), np.log(w1)
                powerlaw = np.exp(lw0 + u * (lw1 - lw0))
            linear = w0 + (w1 - w0) * u
            out[body] = np.where((w0 > 0) & (w1 > 0), powerlaw, linear)
        return out if out.ndim else float(out)

    def integral(self, upper: float) -> float:
        """``int_0^upper omega(s)/s ds`` for the interpolated curve."""
        t, w = self.thresholds, self.omega
        if upper > self.t_max * (1 + 1e-12):
            raise ExtrapolationNeeded(f"integral requested beyond t_max={self.t_max}")
        if upper <= 0:
            return 0.0
        beta = self.head_exponent
        if w[0] > 0 and beta <= DIVERGENCE_EXPONENT:
            return math.inf
        head_end = min(upper, t[0])
        total = 0.0 if w[0] == 0 else w[0] / beta * (head_end / t[0]) ** beta
        for i in range(t.size - 1):
            a, b = t[i], t[i + 1]
            if a >= upper:
                break
            x = min(b, upper)
            total += _segment_integral(a, b, w[i], w[i + 1], x)
        return float(total)

    def to_csv(self) -> str:
        return csv_text(["t", "omega"], [self.thresholds, self.omega])

    def summary(self) -> dict:
        return {
            "integral_value": self.integral_value,
            "divergent": self.divergent,
            "head_exponent": self.head_exponent,
            "t_min": float(self.thresholds[0]),
            "t_max": self.t_max,
        }


def _segment_integral(a, b, wa, wb, x):
    """Integral of omega(s)/s over [a, x] inside the segment [a, b]."""
    la, lx, lb = math.log(a), math.log(x), math.log(b)
    if wa > 0 and wb > 0:
        beta = (math.log(wb) - math.log(wa)) / (lb - la)
        if abs(beta * (lx - la)) < 1e-12:
            return wa * (lx - la)
        if beta * (lx - la) > 30:
            # steep segment (tiny wa): avoid overflow in expm1
            wx = math.exp(math.log(wa) + beta * (lx - la))
            return (wx - wa) / beta
        return wa / beta * math.expm1(beta * (lx - la))
    wx = wa + (wb - wa) * (lx - la) / (lb - la)
    return 0.5 * (wa + wx) * (lx - la)


def _head_exponent(t, w) -> float:
    """Power-law exponent of omega near 0, fitted on the smallest decade."""
    if w[0] == 0:
        return math.inf
    sel = (t <= 10 * t[0]) & (w > 0)
    if sel.sum() < 2:
        sel = w > 0
        sel[np.flatnonzero(sel)[2:]] = False
    if sel.sum() < 2:
        return 0.0
    slope, _ = np.polyfit(np.log(t[sel]), np.log(w[sel]), 1)
    return float(slope)


def omega_curve(field: BeltramiField, noise_floor=DEFAULT_NOISE_FLOOR) -> ModulusCurve:
    """Modulus of asymptotic conformality sampled at the grid radii."""
    absmu = np.where(field.valid, field.abs_mu, -np.inf)
    ring_max = np.max(absmu, axis=1)
    ring_max = np.where(np.isfinite(ring_max), ring_max, 0.0)
    # rings are nested disks around the center: sup over |z| <= t_i is a running max
    return ModulusCurve.from_samples(field.grid.r, np.maximum.accumulate(ring_max), noise_floor)


def tilde_omega(curve: ModulusCurve, C: float, sigma: float, t: float, cutoff=1e-12, max_terms=1_000_000):
    """Geometric sum ``sum_n omega(C sigma**n t)`` and the integral bound on it.

    Returns ``(sum, bound)`` with
    ``bound = omega(Ct) + int_0^{Ct} omega(s)/s ds / (-log sigma)``.
    """
    if not 0 < sigma < 1:
        raise OutOfRange("sigma must lie in (0, 1)")
    if C <= 0 or t <= 0:
        raise OutOfRange("C and t must be positive")
    Ct = C * t
    if Ct > curve.t_max * (1 + 1e-12):
        raise ExtrapolationNeeded(f"C*t={Ct} exceeds sampled range {curve.t_max}")
    Ct = min(Ct, curve.t_max)
    integral = curve.integral(Ct)
    bound = float(curve(Ct)) + integral / -math.log(sigma)
    if math.isinf(integral):
        return math.inf, math.inf
    total = 0.0
    chunk = 4096
    start = 0
    while start < max_terms:
        n = np.arange(start, start + chunk)
        s = Ct * sigma**n
        terms = curve(s)
        small = np.flatnonzero(terms < cutoff)
        if small.size:
            total += float(np.sum(terms[: small[0]]))
            break
        total += float(np.sum(terms))
        start += chunk
    return total, bound


def compose_dilatation(mu_F: complex, mu_G_at_Fz: complex, F_z: complex) -> complex:
    """Beltrami coefficient of ``G o F`` from those of ``F`` and ``G``."""
    if abs(mu_F) >= 1 or abs(mu_G_at_Fz) >= 1:
        raise DegenerateInput("Beltrami coefficients must lie in the open unit disk")
    if F_z == 0:
        raise DegenerateInput("F_z must be nonzero")
    mu_F, mu_G, F_z = complex(mu_F), complex(mu_G_at_Fz), complex(F_z)
    gamma = F_z.conjugate() / F_z
    den = 1 + mu_F.conjugate() * gamma * mu_G
    if abs(den) < 1e-12:
        raise DegenerateInput("composition denominator vanishes")
    return (mu_F + gamma * mu_G) / den


def dilatation_K(k: float) -> float:
    """Maximal dilatation ``(1+k)/(1-k)`` of a Beltrami coefficient with sup ``k``."""
    if not 0 <= k < 1:
        raise OutOfRange("k must lie in [0, 1)")
    return (1 + k) / (1 - k)


class HolderFit(NamedTuple):
    cprime: float
    alpha_fit: float


def holder_mu_bound_check(m, grid: PolarGrid, h: float | None = None, noise_floor=1e-9) -> HolderFit:
    """Least-squares fit of ``log|mu|`` against ``log|z|`` over the grid.

    Recovers ``C'`` and ``alpha`` in ``|mu(z)| ~ C' |z|**alpha``.
    """
    field = beltrami_field(m, grid, h)
    absmu = field.abs_mu
    rr = np.abs(grid.nodes - grid.center)
    sel = field.valid & (absmu > noise_floor)
    if sel.sum() < 3:
        raise FitFailed("Beltrami coefficient below the noise floor everywhere")
    slope, intercept = np.polyfit(np.log(rr[sel]), np.log(absmu[sel]), 1)
    return HolderFit(float(math.exp(intercept)), float(slope))


__all__ = [
    "wirtinger",
    "BeltramiField",
    "beltrami_field",
    "ModulusCurve",
    "omega_curve",
    "tilde_omega",
    "compose_dilatation",
    "dilatation_K",
    "HolderFit",
    "holder_mu_bound_check",
]
