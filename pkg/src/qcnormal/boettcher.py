"""Boettcher coordinates at superattracting fixed points.

After conjugating by ``z -> b z`` so that the leading coefficient is 1, the
coordinate is the telescoping product

    psi(z) = z * prod_j (g(w_j) / w_j**n) ** (1 / n**(j+1)),   w_j = g^j(z),

with principal roots taken factor by factor. Every factor tends to 1, so the
branch choice is unambiguous as long as the factors stay in the right half
plane.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .coords import CoordinateGrid, common_values, invert_near_identity
from .errors import BranchAmbiguity, DegenerateLeading, DomainError, NoConvergence, WrongFixedPointClass
from .grids import PolarGrid
from .koenigs import SUPERATTRACTING, classify_fixed_point
from .maps import EvalBudget, MapSpec, _ipow, evaluate, local_inverse, rescale

_UNDERFLOW = 1e-100


def normalize_leading(g: MapSpec) -> tuple[complex, MapSpec]:
    """Rescale ``g`` so its leading coefficient is 1.

    Returns ``(b, g_tilde)`` with ``b**(n-1) = a_n`` (principal root) and
    ``g_tilde(z) = b * g(z / b)``.
    """
    report = classify_fixed_point(g)
    if report.fp_class != SUPERATTRACTING:
        raise WrongFixedPointClass(f"expected a superattracting fixed point, got {report.fp_class}")
    n, a_n = g.leading_term()
    if n != report.local_degree:
        raise DomainError(f"leading term degree {n} disagrees with detected local degree {report.local_degree}")
    if abs(a_n) < 1e-12:
        raise DegenerateLeading("leading coefficient vanishes")
    b = cmath.exp(cmath.log(a_n) / (n - 1))
    if a_n == 1:
        return 1 + 0j, g
    return b, rescale(g, b)


@dataclass(frozen=True)
class BoettcherResult:
    n: int
    b: complex
    g_tilde: MapSpec
    psi: CoordinateGrid
    max_factor_distance: float

    @property
    def residual(self) -> np.ndarray:
        return self.psi.residual

    def summary(self) -> dict:
        out = self.psi.summary()
        out.update({"n": self.n, "b": self.b, "max_factor_distance": self.max_factor_distance})
        return out


def _boettcher_points(gt: MapSpec, n: int, z: np.ndarray, budget: EvalBudget):
    z = np.asarray(z, dtype=complex).ravel()
    logsum = np.zeros(z.shape, dtype=complex)
    psi = z.copy()
    w = z.copy()
    depth = np.zeros(z.shape, dtype=int)
    active = z != 0
    conv = ~active
    last = np.full(z.shape, np.inf)
    worst = 0.0
    with np.errstate(all="ignore"):
        for j in range(budget.max_iterations):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            wi = w[idx]
            gw = gt._eval(wi)
            if not np.all(np.isfinite(gw)):
                raise DomainError("orbit left the domain of the map")
            factor = gw / _ipow(wi, n)
            if np.any(factor.real <= 0):
                raise BranchAmbiguity("a product factor left the right half plane; shrink the grid")
            worst = max(worst, float(np.abs(factor - 1).max()))
            logsum[idx] += np.log(factor) / float(n) ** (j + 1)
            new = z[idx] * np.exp(logsum[idx])
            delta = np.abs(new - psi[idx])
            psi[idx] = new
            w[idx] = gw
            last[idx] = delta
            depth[idx] = j + 1
            done = (delta < budget.tolerance) | (np.abs(gw) < _UNDERFLOW)
            active[idx[done]] = False
            conv[idx[done]] = True
    return psi, depth, conv, last, worst


def boettcher_psi(g: MapSpec, z, budget: EvalBudget | None = None):
    """Boettcher coordinate of ``g`` itself at arbitrary points.

    Equals ``psi_tilde(b z)``, so ``psi(g(z)) = psi(z)**n`` and ``psi'(0) = b``.
    """
    budget = budget or EvalBudget()
    b, gt = normalize_leading(g)
    n, _ = gt.leading_term()
    arr = np.asarray(z, dtype=complex)
    psi, _, _, _, _ = _boettcher_points(gt, n, b * arr, budget)
    psi = psi.reshape(arr.shape)
    return complex(psi) if psi.ndim == 0 else psi


def boettcher_coordinate(g: MapSpec, grid: PolarGrid, budget: EvalBudget | None = None, strict: bool = True) -> BoettcherResult:
    """Boettcher coordinate of the normalized map on the nodes of ``grid``.

    Grid nodes are read in the coordinate of ``g_tilde``.
    """
    budget = budget or EvalBudget()
    b, gt = normalize_leading(g)
    n, _ = gt.leading_term()
    nodes = grid.nodes
    gz = evaluate(gt, nodes)
    if np.any(np.abs(gz) >= np.abs(nodes)):
        raise DomainError("grid leaves the immediate basin (|g(z)| >= |z| at some node)")
    psi, depth, conv, last, worst = _boettcher_points(gt, n, nodes, budget)
    if strict and not conv.all():
        raise NoConvergence(
            f"{int((~conv).sum())} nodes hit the iteration cap", last_delta=float(last[~conv].max())
        )
    psi_g, _, _, _, _ = _boettcher_points(gt, n, gz, budget)
    residual = np.abs(psi_g - _ipow(psi, n))
    shape = grid.shape
    cg = CoordinateGrid(
        grid,
        psi.reshape(shape),
        depth.reshape(shape),
        residual.reshape(shape),
        0j,
        SUPERATTRACTING,
        budget.tolerance,
        conv.reshape(shape),
        kind="boettcher",
        degree=n,
    )
    return BoettcherResult(n, b, gt, cg, worst)


# -- covering lift -----------------------------------------------------------

class CoveringLift:
    """Conjugacy built ring by ring from a map of the fundamental annulus.

    Rings are ``A_j = {r**(1/n**j) <= |z| <= r**(1/n**(j+1))}``. The map is the
    identity on ``|z| < r``, ``boundary_map`` on ``A_0`` and on ``A_j`` solves
    ``g(phi(z)) = phi(z**n)`` with the branch seeded by
    ``z * (phi(z**n) / z**n)**(1/n)``.
    """

    def __init__(self, g: MapSpec, boundary_map, r: float, k: int, budget: EvalBudget | None = None):
        if not 0 < r < 1:
            raise ValueError("r must lie in (0, 1)")
        self.g = g
        self.n, a_n = g.leading_term()
        if abs(a_n - 1) > 1e-12:
            raise DomainError("covering lift expects a normalized map (leading coefficient 1)")
        self.boundary_map = boundary_map
        self.r = float(r)
        self.k = int(k)
        self.budget = budget or EvalBudget()
        self.outer = self.ring_radius(self.k + 1)

    def ring_radius(self, j: int) -> float:
        return self.r ** (1.0 / self.n**j)

    def ring_index(self, z):
        rho = np.abs(z)
        out = np.full(rho.shape, -1, dtype=int)
        pos = rho >= self.r
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.log(np.log(rho[pos]) / math.log(self.r)) / -math.log(self.n)
        out[pos] = np.clip(np.floor(s + 1e-12), 0, self.k).astype(int)
        return out

    def phi(self, z, ring=None):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        jj = self.ring_index(flat) if ring is None else np.full(flat.shape, int(ring))
        out = flat.copy()
        for j in np.unique(jj):
            sel = jj == j
            if j < 0:
                continue
            if j == 0:
                out[sel] = self.boundary_map(flat[sel])
                continue
            zs = flat[sel]
            zn = _ipow(zs, self.n)
            target = self.phi(zn, ring=j - 1)
            seed = zs * np.exp(np.log(target / zn) / self.n)
            out[sel] = local_inverse(self.g, target, seed, self.budget)
        return out.reshape(z.shape)

    def boundary_mismatch(self, samples: int = 256) -> float:
        th = np.exp(2j * np.pi * (np.arange(samples) + 0.5) / samples)
        circle = self.r * th
        worst = float(np.abs(self.phi(circle, ring=0) - circle).max())
        for j in range(1, self.k + 1):
            circle = self.ring_radius(j) * th
            diff = np.abs(self.phi(circle, ring=j - 1) - self.phi(circle, ring=j))
            worst = max(worst, float(diff.max()))
        return worst


def covering_lift_phi(
    g: MapSpec,
    boundary_map,
    r: float,
    k: int,
    grid: PolarGrid,
    budget: EvalBudget | None = None,
    continuity_tol: float = 1e-8,
    samples: int = 256,
) -> CoordinateGrid:
    """Lift a conjugacy of the fundamental annulus through ``g`` and ``z**n``.

    ``g`` must already be normalized (see ``normalize_leading``). The result
    stores the lifted map in ``phi``, its inverse in ``psi``, the ring index
    in ``depth`` and ``|g(phi(z)) - phi(z**n)|`` in ``residual`` (rings
    ``j >= 1`` only).
    """
    lift = CoveringLift(g, boundary_map, r, k, budget)
    nodes = grid.nodes
    if np.abs(nodes).max() > lift.outer * (1 + 1e-12):
        raise DomainError(f"grid extends beyond the lifted disk of radius {lift.outer}")
    phi = lift.phi(nodes)
    depth = lift.ring_index(nodes)
    inner = depth >= 1
    residual = np.full(grid.shape, np.nan)
    zi = nodes[inner]
    residual[inner] = np.abs(evaluate(g, phi[inner]) - lift.phi(_ipow(zi, lift.n)))
    mismatch = lift.boundary_mismatch(samples)
    if mismatch > 10 * continuity_tol:
        raise BranchAmbiguity(f"lift jumped sheets: boundary mismatch {mismatch:.3e}")
    psi = invert_near_identity(lift.phi, nodes, radius=lift.outer)
    return CoordinateGrid(
        grid,
        psi,
        depth,
        residual,
        0j,
        SUPERATTRACTING,
        continuity_tol,
        np.ones(grid.shape, dtype=bool),
        kind="covering-lift",
        degree=lift.n,
        phi=phi,
        mismatch=mismatch,
        extra={"r": lift.r, "k": lift.k, "outer_radius": lift.outer},
    )


def boettcher_uniqueness(psi1: CoordinateGrid, psi2: CoordinateGrid, n: int) -> tuple[int, float]:
    """Root of unity ``u`` of order ``n-1`` minimizing ``sup |psi2 - u psi1|``.

    Returns the index ``k`` of ``u = exp(2 pi i k / (n-1))`` and the deviation.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    a, b = common_values(psi1, psi2)
    devs = [
        float(np.max(np.abs(b - np.exp(2j * np.pi * k / (n - 1)) * a)))
        for k in range(n - 1)
    ]
    best = int(np.argmin(devs))
    return best, devs[best]


__all__ = [
    "normalize_leading",
    "BoettcherResult",
    "boettcher_psi",
    "boettcher_coordinate",
    "CoveringLift",
    "covering_lift_phi",
    "boettcher_uniqueness",
]
