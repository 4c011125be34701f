"""Explicit holomorphic motions of two circles and their annulus extensions.

A motion here moves the pair of circles ``E = S_r u T_r``. One circle is
held fixed and the other is moved by a family that is holomorphic in the
parameter ``c`` of the unit disk and equals the identity at ``c = 0``:

* Koenigs type (attracting ``f``): ``S_r = {|z| = r}`` fixed, and on
  ``T_r = {|z| = |lam| r}``  ``h(c, z) = (r / (c delta)) f(c delta z / (r lam))``.
* Boettcher type (normalized superattracting ``g``): ``S_r`` fixed, and on
  ``T_r = {|z| = r**(1/n)}``  ``h(c, z) = (r**(1/n) / c) H(c z / r**(1/n))``
  where ``H`` is the lift with ``g(H(w)) = w**n`` and ``H(w)/w -> 1``.

Both are written as ``z * F(w) / (lam w)`` (resp. ``z * H(w) / w``) so the
value at ``c = 0`` is exactly ``z``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dilatation import wirtinger
from .errors import BranchFailure, NonCrossingViolated, OutOfRange
from .export import csv_text
from .grids import PolarGrid
from .maps import EvalBudget, MapSpec, _ipow, evaluate, local_inverse

KOENIG = "koenig"
BOETTCHER = "boettcher"

CR_STEP = 1e-4
CR_TOL = 1e-6


@dataclass(frozen=True)
class Motion:
    """A motion of two concentric circles given by one callable per circle."""

    kind: str
    inner_radius: float
    outer_radius: float
    inner: Callable
    outer: Callable


def _identity(c, z):
    return np.array(z, dtype=complex, copy=True)


def default_c_samples(radii=(0.25, 0.5, 0.75, 0.9), per_radius=8) -> np.ndarray:
    ang = np.exp(2j * np.pi * np.arange(per_radius) / per_radius)
    return np.concatenate([[0j], (np.asarray(radii)[:, None] * ang[None, :]).ravel()])


def _circle(radius, samples):
    return radius * np.exp(2j * np.pi * np.arange(samples) / samples)


@dataclass(frozen=True)
class MotionSample:
    """Values of a motion on ``samples`` equally spaced points of each circle."""

    motion: Motion
    r: float
    c_samples: np.ndarray
    inner_points: np.ndarray
    outer_points: np.ndarray
    inner_values: np.ndarray
    outer_values: np.ndarray

    @property
    def kind(self) -> str:
        return self.motion.kind

    @property
    def E_points(self) -> np.ndarray:
        return np.concatenate([self.inner_points, self.outer_points])

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([self.inner_values, self.outer_values], axis=1)

    def to_csv(self) -> str:
        c = np.repeat(self.c_samples, self.E_points.size)
        z = np.tile(self.E_points, self.c_samples.size)
        vals = self.values.ravel()
        return csv_text(
            ["c_re", "c_im", "r", "theta", "H_re", "H_im"],
            [c.real, c.imag, np.abs(z), np.angle(z) % (2 * np.pi), vals.real, vals.imag],
        )


def sample_motion(motion: Motion, r: float, samples: int = 64, c_samples=None) -> MotionSample:
    c_samples = default_c_samples() if c_samples is None else np.asarray(c_samples, dtype=complex)
    zin = _circle(motion.inner_radius, samples)
    zout = _circle(motion.outer_radius, samples)
    vin = np.array([motion.inner(c, zin) for c in c_samples])
    vout = np.array([motion.outer(c, zout) for c in c_samples])
    return MotionSample(motion, float(r), c_samples, zin, zout, vin, vout)


def koenig_motion(f: MapSpec, r: float, delta: float) -> Motion:
    lam = complex(f.multiplier)
    if not 0 < abs(lam) < 1:
        raise ValueError("Koenigs motion needs an attracting fixed point")
    if not 0 < r <= delta:
        raise ValueError("need 0 < r <= delta")

    def moved(c, z):
        z = np.asarray(z, dtype=complex)
        if c == 0:
            return z.copy()
        w = c * delta * z / (r * lam)
        return z * (evaluate(f, w) / (lam * w))

    return Motion(KOENIG, abs(lam) * r, r, moved, _identity)


def build_motion_koenig(f: MapSpec, r: float, delta: float, samples: int = 64, c_samples=None) -> MotionSample:
    """Motion of ``S_r u T_r`` used to build the Koenigs coordinate by lifting."""
    z = np.concatenate([_circle(delta * s, 64) for s in (0.25, 0.5, 0.75, 1.0)])
    if np.any(np.abs(evaluate(f, z)) >= np.abs(z)):
        raise ValueError(f"|f(z)| < |z| fails on the disk of radius {delta}")
    return sample_motion(koenig_motion(f, r, delta), r, samples, c_samples)


def boettcher_lift(g: MapSpec, w, budget: EvalBudget | None = None, steps: int = 16):
    """Branch ``H`` of ``g^{-1} o q_n`` with ``H(w)/w -> 1``, by continuation along rays."""
    budget = budget or EvalBudget()
    n, _ = g.leading_term()
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    out = np.zeros(w.shape, dtype=complex)
    nz = w != 0
    wn = w[nz]
    ts = np.arange(1, steps + 1) / steps
    u = ts[0] * wn
    for i, t in enumerate(ts):
        u = local_inverse(g, _ipow(t * wn, n), u, budget)
        if i + 1 < steps:
            u = u * (ts[i + 1] / t)
    out[nz] = u
    return out


def boettcher_motion(g: MapSpec, r: float, budget: EvalBudget | None = None) -> Motion:
    n, a_n = g.leading_term()
    if abs(a_n - 1) > 1e-12:
        raise ValueError("Boettcher motion expects a normalized map (leading coefficient 1)")
    if n < 2:
        raise ValueError("Boettcher motion needs local degree >= 2")
    if not 0 < r <= 0.5 ** (n / (n - 1)):
        raise OutOfRange(f"r must lie in (0, (1/2)**(n/(n-1))] = (0, {0.5 ** (n / (n - 1))}]")
    root = r ** (1.0 / n)

    def moved(c, z):
        z = np.asarray(z, dtype=complex)
        if c == 0:
            return z.copy()
        w = c * z / root
        return z * (boettcher_lift(g, w, budget) / w)

    return Motion(BOETTCHER, r, root, _identity, moved)


def build_motion_boettcher(g: MapSpec, r: float, samples: int = 64, c_samples=None, budget=None) -> MotionSample:
    """Motion of ``S_r u T_r`` used to build the Boettcher coordinate by lifting.

    ``g`` must have leading coefficient 1 (see ``boettcher.normalize_leading``).
    """
    ms = sample_motion(boettcher_motion(g, r, budget), r, samples, c_samples)
    low = float(np.abs(ms.outer_values).min())
    if not low > r:
        raise NonCrossingViolated(f"moved outer circle reaches |h| = {low:.3e} <= r = {r}")
    return ms


@dataclass(frozen=True)
class MotionAxiomsReport:
    identity_ok: bool
    injective_ok: bool
    min_pair_distance: float
    separated_ok: bool
    inner_max: float
    outer_min: float
    cr_max_residual: float
    cr_ok: bool

    @property
    def passed(self) -> bool:
        return self.identity_ok and self.injective_ok and self.separated_ok and self.cr_ok

    def summary(self) -> dict:
        return {
            "identity_ok": self.identity_ok,
            "injective_ok": self.injective_ok,
            "min_pair_distance": self.min_pair_distance,
            "separated_ok": self.separated_ok,
            "inner_image_max_modulus": self.inner_max,
            "outer_image_min_modulus": self.outer_min,
            "cr_max_residual": self.cr_max_residual,
            "cr_ok": self.cr_ok,
            "passed": self.passed,
        }


def cauchy_riemann_residual(fn: Callable, c: complex, z, eps: float = CR_STEP) -> np.ndarray:
    """``|d/d(conj c) fn(c, z)|`` from the 5-point stencil around ``c``."""
    dx = (fn(c + eps, z) - fn(c - eps, z)) / (2 * eps)
    dy = (fn(c + 1j * eps, z) - fn(c - 1j * eps, z)) / (2 * eps)
    return np.abs(0.5 * (dx + 1j * dy))


def check_motion_axioms(ms: MotionSample, cr_step: float = CR_STEP, cr_tol: float = CR_TOL) -> MotionAxiomsReport:
    """Identity at ``c = 0``, injectivity for each ``c`` and holomorphy in ``c``.

    Injectivity is checked by the minimal pairwise distance of the images of
    all sampled points together with the separation of the two image
    circles (the image of the inner circle stays strictly inside the image
    of the outer one). Failures are reported, never raised.
    """
    mot = ms.motion
    zero = mot.inner(0j, ms.inner_points), mot.outer(0j, ms.outer_points)
    identity_ok = bool(np.array_equal(zero[0], ms.inner_points) and np.array_equal(zero[1], ms.outer_points))
    vals = ms.values
    dmin = np.inf
    for row in vals:
        d = np.abs(row[:, None] - row[None, :])
        np.fill_diagonal(d, np.inf)
        dmin = min(dmin, float(d.min()))
    inner_max = float(np.abs(ms.inner_values).max())
    outer_min = float(np.abs(ms.outer_values).min())
    cr = 0.0
    for c in ms.c_samples:
        cr = max(
            cr,
            float(cauchy_riemann_residual(mot.inner, c, ms.inner_points, cr_step).max()),
            float(cauchy_riemann_residual(mot.outer, c, ms.outer_points, cr_step).max()),
        )
    return MotionAxiomsReport(
        identity_ok,
        bool(dmin > 0),
        dmin,
        bool(inner_max < outer_min),
        inner_max,
        outer_min,
        cr,
        bool(cr < cr_tol),
    )


def _trig_interp(samples: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Trigonometric interpolant of equally spaced periodic samples."""
    N = samples.size
    coef = np.fft.fft(samples) / N
    k = np.fft.fftfreq(N, d=1.0 / N)
    theta = np.asarray(theta, dtype=float)
    basis = np.exp(1j * np.multiply.outer(theta, k))
    if N % 2 == 0:
        nyq = N // 2
        basis[..., nyq] = np.cos(nyq * theta)
    return basis @ coef


class RadialExtension:
    """``H(z) = z exp((1-s) L_in(theta) + s L_out(theta))`` on the annulus."""

    def __init__(self, motion: Motion, c: complex, samples: int):
        self.c = complex(c)
        self.r_in, self.r_out = motion.inner_radius, motion.outer_radius
        zin, zout = _circle(self.r_in, samples), _circle(self.r_out, samples)
        qin = motion.inner(self.c, zin) / zin
        qout = motion.outer(self.c, zout) / zout
        if np.any(np.abs(qin - 1) >= 0.5) or np.any(np.abs(qout - 1) >= 0.5):
            raise BranchFailure(f"motion too far from the identity at c={self.c} for principal logarithms")
        self.log_in = np.log(qin)
        self.log_out = np.log(qout)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        theta = np.angle(z) % (2 * np.pi)
        s = np.log(np.abs(z) / self.r_in) / np.log(self.r_out / self.r_in)
        lin = _trig_interp(self.log_in, theta)
        lout = _trig_interp(self.log_out, theta)
        return z * np.exp((1 - s) * lin + s * lout)


def motion_dilatation_bound(c: complex) -> float:
    """``(1 + |c|) / (1 - |c|)``, the dilatation bound of an optimal extension."""
    a = abs(c)
    if a >= 1:
        raise OutOfRange("|c| must be < 1")
    return (1 + a) / (1 - a)


@dataclass(frozen=True)
class ExtendedMotion:
    base: MotionSample
    grid: PolarGrid
    c_values: np.ndarray
    H: np.ndarray
    measured_k: np.ndarray
    extensions: tuple

    @property
    def bound_K(self) -> np.ndarray:
        return np.array([motion_dilatation_bound(c) for c in self.c_values])

    @property
    def measured_K(self) -> np.ndarray:
        return (1 + self.measured_k) / (1 - self.measured_k)

    def boundary_map(self, c: complex) -> Callable:
        for ext in self.extensions:
            if ext.c == complex(c):
                return ext
        raise KeyError(f"no extension computed at c={c}")

    def to_csv(self) -> str:
        nodes = self.grid.nodes.ravel()
        c = np.repeat(self.c_values, nodes.size)
        z = np.tile(nodes, self.c_values.size)
        vals = self.H.reshape(len(self.c_values), -1).ravel()
        return csv_text(
            ["c_re", "c_im", "r", "theta", "H_re", "H_im"],
            [c.real, c.imag, np.abs(z), np.angle(z) % (2 * np.pi), vals.real, vals.imag],
        )

    def dilatation_table(self) -> list:
        return [
            {
                "c": c,
                "abs_c": abs(c),
                "measured_k": float(k),
                "measured_K": float((1 + k) / (1 - k)),
                "bound_k": abs(c),
                "bound_K": motion_dilatation_bound(c),
            }
            for c, k in zip(self.c_values, self.measured_k)
        ]


def extend_motion_radial(
    ms: MotionSample,
    grid: PolarGrid | None = None,
    c_values=None,
    h: float | None = None,
) -> ExtendedMotion:
    """Extend a circle motion to the annulus between the circles.

    Log-radial linear interpolation of ``log(h/z)`` between the circles, with
    trigonometric interpolation in angle. ``measured_k`` is the sup of the
    finite-difference Beltrami coefficient of the extension over ``grid``.
    """
    mot = ms.motion
    if grid is None:
        grid = PolarGrid.logspace(mot.inner_radius, mot.outer_radius, 16, 64)
    c_values = ms.c_samples if c_values is None else np.asarray(c_values, dtype=complex)
    c_values = np.atleast_1d(c_values)
    h = 1e-5 * mot.outer_radius if h is None else h
    samples = ms.inner_points.size
    nodes = grid.nodes
    exts, Hs, ks = [], [], []
    for c in c_values:
        ext = RadialExtension(mot, c, samples)
        exts.append(ext)
        Hs.append(ext(nodes))
        fz, fzbar = wirtinger(ext, nodes, h)
        ks.append(float(np.max(np.abs(fzbar / fz))))
    return ExtendedMotion(ms, grid, c_values, np.array(Hs), np.array(ks), tuple(exts))


__all__ = [
    "KOENIG",
    "BOETTCHER",
    "Motion",
    "MotionSample",
    "sample_motion",
    "default_c_samples",
    "koenig_motion",
    "build_motion_koenig",
    "boettcher_lift",
    "boettcher_motion",
    "build_motion_boettcher",
    "MotionAxiomsReport",
    "cauchy_riemann_residual",
    "check_motion_axioms",
    "RadialExtension",
    "ExtendedMotion",
    "extend_motion_radial",
    "motion_dilatation_bound",
]
