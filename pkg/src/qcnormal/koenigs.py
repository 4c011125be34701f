"""Fixed-point classification and Koenigs linearization.

The linearizer ``psi`` solves ``psi(f(z)) = lam * psi(z)`` with ``psi'(0) = 1``.
Attracting points use the forward limit ``f^k(z) / lam^k``; repelling points
run the same limit on the local inverse branch fixing 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coords import CoordinateGrid, common_values, invert_near_identity
from .dilatation import wirtinger
from .errors import (
    ContinuityBreach,
    ControlViolated,
    DomainError,
    NoConvergence,
    OrbitEscape,
    WrongFixedPointClass,
)
from .grids import PolarGrid
from .maps import EvalBudget, MapSpec, evaluate, local_inverse

ATTRACTING = "attracting"
REPELLING = "repelling"
SUPERATTRACTING = "superattracting"
NEUTRAL = "neutral"

NEUTRAL_BAND = 1e-9
ZERO_MULTIPLIER = 1e-14


@dataclass(frozen=True)
class FixedPointReport:
    multiplier: complex
    fp_class: str
    local_degree: int | None
    estimation_method: str
    inconclusive: bool = False

    def summary(self) -> dict:
        return {
            "multiplier": self.multiplier,
            "abs_multiplier": abs(self.multiplier),
            "class": self.fp_class,
            "local_degree": self.local_degree,
            "estimation_method": self.estimation_method,
            "inconclusive": self.inconclusive,
        }


def _class_of(lam: complex) -> tuple[str, bool]:
    a = abs(lam)
    if a <= ZERO_MULTIPLIER:
        return SUPERATTRACTING, False
    if abs(a - 1) <= NEUTRAL_BAND:
        return NEUTRAL, True
    return (ATTRACTING if a < 1 else REPELLING), False


def orbit_ratio_multiplier(m, radii=(1e-3, 1e-4, 1e-5, 1e-6)) -> complex:
    """Estimate ``lim f(z)/z`` by Richardson extrapolation along shrinking z.

    Successive radii differ by a factor 10 and the ratio error is O(|z|), so one
    extrapolation step removes the leading term.
    """
    z = np.asarray(radii, dtype=complex) * np.exp(0.37j)
    ratios = evaluate(m, z) / z if isinstance(m, MapSpec) else m(z) / z
    rich = (10 * ratios[1:] - ratios[:-1]) / 9
    return complex(rich[-1])


def local_degree(m, z0=1e-3, directions=8) -> int:
    """Order of vanishing at 0 from the slope of ``log|g|`` against ``log|z|``."""
    ang = np.exp(2j * np.pi * (np.arange(directions) + 0.25) / directions)
    z1, z2 = z0 * ang, 0.1 * z0 * ang
    g1, g2 = np.abs(evaluate(m, z1)), np.abs(evaluate(m, z2))
    slope = np.mean(np.log(g1 / g2)) / math.log(10.0)
    return int(round(slope))


def classify_fixed_point(m: MapSpec, budget: EvalBudget | None = None, method="symbolic") -> FixedPointReport:
    """Multiplier and class of the fixed point 0.

    ``method`` is ``"symbolic"`` (closed-form multiplier of the variant),
    ``"finite-difference"`` (Wirtinger ``f_z`` at 0) or ``"orbit-ratio"``.
    """
    if abs(evaluate(m, 0j)) != 0:
        raise DomainError("map does not fix 0")
    if method == "symbolic":
        lam = complex(m.multiplier)
    elif method == "finite-difference":
        lam, _ = wirtinger(m, 0j, 1e-6)
    elif method == "orbit-ratio":
        lam = orbit_ratio_multiplier(m)
    else:
        raise ValueError(f"unknown estimation method {method!r}")
    cls, inconclusive = _class_of(lam)
    degree = None
    if cls == SUPERATTRACTING:
        lam = 0j
        degree = local_degree(m)
        if degree < 2:
            raise DomainError(f"multiplier vanishes but detected local degree is {degree}")
    return FixedPointReport(lam, cls, degree, method, inconclusive)


# -- control condition -------------------------------------------------------

@dataclass(frozen=True)
class ControlReport:
    delta: float
    C_hat: float
    max_n_checked: int
    violated: bool
    sup_ratio: float
    inf_ratio: float

    def summary(self) -> dict:
        return {
            "delta": self.delta,
            "C_hat": self.C_hat,
            "max_n_checked": self.max_n_checked,
            "violated": self.violated,
            "sup_ratio": self.sup_ratio,
            "inf_ratio": self.inf_ratio,
        }


def _disk_samples(delta, samples, rings=8):
    radii = delta * np.arange(1, rings + 1) / rings
    th = 2 * np.pi * np.arange(samples) / samples
    return (radii[:, None] * np.exp(1j * th)[None, :]).ravel()


def control_condition(m: MapSpec, delta: float, n_max: int = 60, samples: int = 32) -> ControlReport:
    """Check ``C^-1 <= |f^n(z) / (lam^n z)| <= C`` over a sample of the closed disk.

    Only ``n = 0..n_max`` and the sampled points are examined.
    """
    lam = complex(m.multiplier)
    if not 0 < abs(lam) < 1:
        raise WrongFixedPointClass("control condition is stated for attracting fixed points")
    z = _disk_samples(delta, samples)
    w = z.copy()
    h = np.ones(z.shape, dtype=complex)
    hi = lo = 1.0
    with np.errstate(all="ignore"):
        for n in range(1, n_max + 1):
            if np.any(np.abs(w) > m.radius):
                raise OrbitEscape(f"orbit left the disk of radius {m.radius} at step {n}")
            fw = m._eval(w)
            if not np.all(np.isfinite(fw)):
                raise OrbitEscape(f"orbit hit the boundary of the domain at step {n}")
            live = w != 0
            h[live] = h[live] * m._quotient(w[live], fw[live])
            w = fw
            a = np.abs(h)
            hi, lo = max(hi, float(a.max())), min(lo, float(a.min()))
    violated = not (np.isfinite(hi) and np.isfinite(lo) and lo > 1e-12 and hi < 1e12)
    C_hat = max(hi, 1 / lo) if not violated else math.inf
    return ControlReport(float(delta), float(C_hat), int(n_max), violated, hi, lo)


# -- linearizers -------------------------------------------------------------

def _forward_points(m: MapSpec, lam: complex, z: np.ndarray, budget: EvalBudget):
    z = np.asarray(z, dtype=complex).ravel()
    psi = z.copy()
    w = z.copy()
    depth = np.zeros(z.shape, dtype=int)
    active = np.ones(z.shape, dtype=bool)
    last = np.full(z.shape, np.inf)
    lam_k = 1 + 0j
    with np.errstate(all="ignore"):
        for k in range(1, budget.max_iterations + 1):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            wn = m._eval(w[idx])
            if not np.all(np.isfinite(wn)):
                raise OrbitEscape("forward orbit left the domain of the map")
            lam_k = lam_k * lam
            new = wn / lam_k
            delta = np.abs(new - psi[idx])
            psi[idx] = new
            w[idx] = wn
            last[idx] = delta
            done = delta < budget.tolerance
            depth[idx] = k
            active[idx[done]] = False
    return psi, depth, ~active, last


def _backward_points(m: MapSpec, lam: complex, z: np.ndarray, budget: EvalBudget):
    z = np.asarray(z, dtype=complex).ravel()
    psi = z.copy()
    w = z.copy()
    depth = np.zeros(z.shape, dtype=int)
    active = np.ones(z.shape, dtype=bool)
    last = np.full(z.shape, np.inf)
    lam_k = 1 + 0j
    for k in range(1, budget.max_iterations + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        wi = w[idx]
        wn = local_inverse(m, wi, wi / lam, budget)
        lam_k = lam_k * lam
        new = lam_k * wn
        delta = np.abs(new - psi[idx])
        psi[idx] = new
        w[idx] = wn
        last[idx] = delta
        depth[idx] = k
        active[idx[delta < budget.tolerance]] = False
    return psi, depth, ~active, last


def koenigs_psi(m: MapSpec, z, budget: EvalBudget | None = None, depth: int | None = None):
    """Koenigs coordinate at arbitrary points.

    With ``depth`` given the limit is truncated at exactly that many steps
    instead of stopping adaptively.
    """
    budget = budget or EvalBudget()
    lam = complex(m.multiplier)
    cls, _ = _class_of(lam)
    if cls not in (ATTRACTING, REPELLING):
        raise WrongFixedPointClass(f"Koenigs linearization needs 0 < |lam| != 1, got {cls}")
    arr = np.asarray(z, dtype=complex)
    if depth is not None:
        budget = EvalBudget(depth, 1e-300, budget.newton_max_steps, budget.newton_tolerance)
    points = _forward_points if cls == ATTRACTING else _backward_points
    psi, _, _, _ = points(m, lam, arr, budget)
    psi = psi.reshape(arr.shape)
    return complex(psi) if psi.ndim == 0 else psi


def _koenigs_grid(m, grid, budget, points, cls, strict):
    lam = complex(m.multiplier)
    nodes = grid.nodes
    psi, depth, conv, last = points(m, lam, nodes, budget)
    if strict and not conv.all():
        raise NoConvergence(
            f"{int((~conv).sum())} nodes hit the iteration cap {budget.max_iterations}",
            last_delta=float(last[~conv].max()),
        )
    fz = evaluate(m, nodes).ravel()
    psi_f, _, _, _ = points(m, lam, fz, budget)
    residual = np.abs(psi_f - lam * psi)
    shape = grid.shape
    return CoordinateGrid(
        grid,
        psi.reshape(shape),
        depth.reshape(shape),
        residual.reshape(shape),
        lam,
        cls,
        budget.tolerance,
        conv.reshape(shape),
        kind="koenigs",
    )


def koenigs_forward(
    m: MapSpec,
    grid: PolarGrid,
    budget: EvalBudget | None = None,
    check_control: bool = True,
    strict: bool = True,
) -> CoordinateGrid:
    """Linearizer of an attracting fixed point on every node of ``grid``."""
    budget = budget or EvalBudget()
    report = classify_fixed_point(m, budget)
    if report.fp_class != ATTRACTING:
        raise WrongFixedPointClass(f"koenigs_forward needs an attracting point, got {report.fp_class}")
    if check_control:
        delta = grid.outer_radius + abs(grid.center)
        ctrl = control_condition(m, delta, min(budget.max_iterations, 60))
        if ctrl.violated:
            raise ControlViolated(f"control condition fails on the disk of radius {delta}")
    return _koenigs_grid(m, grid, budget, _forward_points, ATTRACTING, strict)


def koenigs_backward(m: MapSpec, grid: PolarGrid, budget: EvalBudget | None = None, strict: bool = True) -> CoordinateGrid:
    """Linearizer of a repelling fixed point through the inverse branch fixing 0."""
    budget = budget or EvalBudget()
    report = classify_fixed_point(m, budget)
    if report.fp_class != REPELLING:
        raise WrongFixedPointClass(f"koenigs_backward needs a repelling point, got {report.fp_class}")
    return _koenigs_grid(m, grid, budget, _backward_points, REPELLING, strict)


def koenigs_coordinate(m: MapSpec, grid: PolarGrid, budget: EvalBudget | None = None, **kwargs) -> CoordinateGrid:
    """Dispatch to the forward or backward scheme by fixed-point class."""
    lam = complex(m.multiplier)
    if _class_of(lam)[0] == REPELLING:
        return koenigs_backward(m, grid, budget, **kwargs)
    return koenigs_forward(m, grid, budget, **kwargs)


# -- annulus lift ----------------------------------------------------------

class AnnulusLift:
    """Conjugacy built by propagating a map of the fundamental annulus.

    ``A_j = {|lam|**(j+1) r <= |z| <= |lam|**j r}`` for ``j >= -k``; on
    ``A_j`` the map is ``f^j(phi_0(lam**-j z))``, negative ``j`` using the
    local inverse of ``f``.
    """

    def __init__(self, m: MapSpec, boundary_map, r: float, k: int, budget: EvalBudget | None = None):
        self.m = m
        self.boundary_map = boundary_map
        self.r = float(r)
        self.k = int(k)
        self.budget = budget or EvalBudget()
        self.lam = complex(m.multiplier)
        if not 0 < abs(self.lam) < 1:
            raise WrongFixedPointClass("annulus lift needs an attracting fixed point")
        self.delta = self.r * abs(self.lam) ** (-self.k)

    def ring_index(self, z):
        rho = np.abs(z)
        with np.errstate(divide="ignore"):
            j = np.floor(np.log(self.r / rho) / -math.log(abs(self.lam)) + 1e-12)
        j = np.where(rho == 0, 0, j)
        return np.maximum(j, -self.k).astype(int)

    def phi(self, z, ring=None):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.zeros(flat.shape, dtype=complex)
        jj = self.ring_index(flat) if ring is None else np.full(flat.shape, int(ring))
        for j in np.unique(jj):
            sel = (jj == j) & (flat != 0)
            if not sel.any():
                continue
            u = flat[sel] * self.lam ** (-int(j))
            v = np.asarray(self.boundary_map(u), dtype=complex)
            if j >= 0:
                for _ in range(j):
                    v = self.m._eval(v)
            else:
                for _ in range(-j):
                    v = local_inverse(self.m, v, v / self.lam, self.budget)
            out[sel] = v
        return out.reshape(z.shape)

    def boundary_mismatch(self, max_ring: int, samples: int = 256) -> float:
        th = np.exp(2j * np.pi * (np.arange(samples) + 0.5) / samples)
        worst = 0.0
        for j in range(-self.k, max_ring):
            circle = abs(self.lam) ** (j + 1) * self.r * th
            diff = np.abs(self.phi(circle, ring=j) - self.phi(circle, ring=j + 1))
            worst = max(worst, float(diff.max()))
        return worst


def annulus_lift_phi(
    m: MapSpec,
    boundary_map,
    r: float,
    k: int,
    grid: PolarGrid,
    budget: EvalBudget | None = None,
    continuity_tol: float = 1e-8,
    samples: int = 256,
) -> CoordinateGrid:
    """Extend a conjugacy given on the fundamental annulus to the disk of radius ``r |lam|**-k``.

    ``boundary_map`` must be the identity on ``|z| = r`` and ``f(z/lam)`` on
    ``|z| = |lam| r`` for the pieces to glue. The returned grid stores the
    lifted map in ``phi``, its inverse in ``psi``, the annulus index in
    ``depth`` and ``|f(phi(z)) - phi(lam z)|`` in ``residual``.
    """
    lift = AnnulusLift(m, boundary_map, r, k, budget)
    nodes = grid.nodes
    if np.abs(nodes).max() > lift.delta * (1 + 1e-12):
        raise DomainError(f"grid extends beyond the lifted disk of radius {lift.delta}")
    phi = lift.phi(nodes)
    residual = np.abs(evaluate(m, phi) - lift.phi(lift.lam * nodes))
    depth = lift.ring_index(nodes)
    mismatch = lift.boundary_mismatch(int(depth.max()) + 1, samples)
    if mismatch > continuity_tol:
        raise ContinuityBreach(f"lift pieces disagree by {mismatch:.3e} on a shared circle")
    psi = invert_near_identity(lift.phi, nodes, radius=lift.delta)
    return CoordinateGrid(
        grid,
        psi,
        depth,
        residual,
        lift.lam,
        ATTRACTING,
        continuity_tol,
        np.ones(grid.shape, dtype=bool),
        kind="annulus-lift",
        phi=phi,
        mismatch=mismatch,
        extra={"r": lift.r, "k": lift.k, "delta": lift.delta},
    )


def uniqueness_check(psi1: CoordinateGrid, psi2: CoordinateGrid) -> tuple[complex, float]:
    """Mean of ``psi2/psi1`` over shared nodes and its max relative deviation."""
    a, b = common_values(psi1, psi2)
    ratio = b / a
    mean = complex(np.mean(ratio))
    return mean, float(np.max(np.abs(ratio - mean)) / abs(mean))


__all__ = [
    "ATTRACTING",
    "REPELLING",
    "SUPERATTRACTING",
    "NEUTRAL",
    "FixedPointReport",
    "classify_fixed_point",
    "orbit_ratio_multiplier",
    "local_degree",
    "ControlReport",
    "control_condition",
    "koenigs_psi",
    "koenigs_forward",
    "koenigs_backward",
    "koenigs_coordinate",
    "AnnulusLift",
    "annulus_lift_phi",
    "uniqueness_check",
]
