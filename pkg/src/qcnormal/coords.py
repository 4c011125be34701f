"""Coordinate grids shared by the linearizers and the Boettcher module."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, NoConvergence
from .dilatation import wirtinger
from .export import csv_text
from .grids import PolarGrid


@dataclass(frozen=True)
class CoordinateGrid:
    """Normal-form coordinate ``psi`` (the inverse of the conjugacy) on a grid.

    ``residual`` is the functional-equation residual per node (nan where the
    equation is not checked). For lift constructions ``phi`` holds the
    conjugacy itself and ``psi`` its numerical inverse; ``depth`` is then the
    annulus index of each node.
    """

    grid: PolarGrid
    psi: np.ndarray
    depth: np.ndarray
    residual: np.ndarray
    multiplier: complex
    fp_class: str
    tolerance: float
    converged: np.ndarray
    kind: str = "koenigs"
    degree: int = 1
    phi: np.ndarray | None = None
    mismatch: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        res = self.residual[np.isfinite(self.residual)]
        return float(res.max()) if res.size else float("nan")

    @property
    def normalization_error(self) -> float:
        """``max |psi(z)/z - 1|`` on the innermost ring."""
        z = self.grid.nodes[0] - self.grid.center
        return float(np.max(np.abs(self.psi[0] / z - 1)))

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def to_csv(self) -> str:
        g = self.grid
        r = np.repeat(g.r, g.angles_per_ring)
        th = np.tile(g.thetas, len(g.radii))
        psi = self.psi.ravel()
        return csv_text(
            ["r", "theta", "re_psi", "im_psi", "depth", "residual"],
            [r, th, psi.real, psi.imag, self.depth.ravel(), self.residual.ravel()],
        )

    def summary(self) -> dict:
        out = {
            "kind": self.kind,
            "multiplier": self.multiplier,
            "class": self.fp_class,
            "degree": self.degree,
            "max_residual": self.max_residual,
            "normalization_error": self.normalization_error,
            "tolerance": self.tolerance,
            "max_depth": int(np.max(self.depth)),
            "all_converged": self.all_converged,
        }
        if self.mismatch is not None:
            out["boundary_mismatch"] = self.mismatch
        out.update(self.extra)
        return out


def common_values(a: CoordinateGrid, b: CoordinateGrid, min_nodes=100):
    """psi values of both grids on their shared, finite nodes."""
    ia, ib = a.grid.common_nodes(b.grid)
    pa, pb = a.psi.ravel()[ia], b.psi.ravel()[ib]
    ok = np.isfinite(pa) & np.isfinite(pb) & (pa != 0)
    if ok.sum() < min_nodes:
        raise GridMismatch(f"grids share only {int(ok.sum())} usable nodes (need {min_nodes})")
    return pa[ok], pb[ok]


def invert_near_identity(phi, w, tol=1e-13, max_steps=200, radius=None):
    """Solve ``phi(z) = w`` for a map with ``phi(z)/z`` close to a constant.

    Newton steps use the real Jacobian from the Wirtinger stencil, so this
    also applies to quasiconformal (non-holomorphic) maps. If ``phi`` is only defined on ``|z| <= radius``,
    targets whose preimage leaves that disk get nan.
    """
    w = np.asarray(w, dtype=complex)
    z = w.copy()
    active = np.ones(w.shape, dtype=bool)
    for _ in range(max_steps):
        if radius is not None:
            out = active & (np.abs(z) > radius)
            z[out] = np.nan
            active &= ~out
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return z
        zi = z.flat[idx]
        pz = phi(zi)
        err = w.flat[idx] - pz
        done = np.abs(err) <= tol * np.abs(w.flat[idx])
        active.flat[idx[done]] = False
        if not active.any():
            return z
        keep = ~done
        zk, ek = zi[keep], err[keep]
        fz, fzbar = wirtinger(phi, zk, 1e-7 * np.abs(zk))
        jac = np.abs(fz) ** 2 - np.abs(fzbar) ** 2
        z.flat[idx[keep]] = zk + (np.conj(fz) * ek - fzbar * np.conj(ek)) / jac
    raise NoConvergence("inversion of the lifted conjugacy did not converge")
