"""Polar sampling grids around a fixed point."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch


@dataclass(frozen=True)
class PolarGrid:
    """Rings of equally spaced angles ``2*pi*j/angles_per_ring`` around ``center``.

    Arrays built from a grid have shape ``(len(radii), angles_per_ring)``.
    """

    center: complex
    radii: tuple
    angles_per_ring: int

    def __post_init__(self):
        radii = tuple(float(r) for r in np.ravel(self.radii))
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "center", complex(self.center))
        if not radii or radii[0] <= 0:
            raise ValueError("radii must be positive")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if self.angles_per_ring < 8:
            raise ValueError("need at least 8 angles per ring")

    @classmethod
    def logspace(cls, r_min, r_max, rings, angles, center=0j):
        return cls(center, tuple(np.geomspace(r_min, r_max, rings)), angles)

    @property
    def r(self) -> np.ndarray:
        return np.asarray(self.radii)

    @property
    def thetas(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.angles_per_ring) / self.angles_per_ring

    @property
    def shape(self):
        return (len(self.radii), self.angles_per_ring)

    @property
    def nodes(self) -> np.ndarray:
        return self.center + self.r[:, None] * np.exp(1j * self.thetas)[None, :]

    @property
    def inner_radius(self) -> float:
        return self.radii[0]

    @property
    def outer_radius(self) -> float:
        return self.radii[-1]

    def common_nodes(self, other: "PolarGrid", rtol=1e-12):
        """Flat indices ``(ia, ib)`` of nodes shared by both grids."""
        if abs(self.center - other.center) > rtol * max(1.0, abs(self.center)):
            raise GridMismatch("grids have different centers")
        ra, rb = self.r, other.r
        pairs_r = [(i, j) for i, a in enumerate(ra) for j in np.flatnonzero(np.isclose(rb, a, rtol=rtol, atol=0))]
        # angle 2*pi*p/A equals 2*pi*q/B iff p*B == q*A
        na, nb = self.angles_per_ring, other.angles_per_ring
        g = np.gcd(na, nb)
        pa = np.arange(0, na, na // g)
        pb = pa * nb // na
        ia = [i * na + p for i, _ in pairs_r for p in pa]
        ib = [j * nb + q for _, j in pairs_r for q in pb]
        return np.asarray(ia, dtype=int), np.asarray(ib, dtype=int)

    def to_dict(self):
        return {
            "center": [self.center.real, self.center.imag],
            "radii": list(self.radii),
            "angles_per_ring": self.angles_per_ring,
        }
