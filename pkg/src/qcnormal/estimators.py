"""scikit-learn style wrappers around the coordinate and dilatation routines.

Points are given either as a complex array or as an ``(n, 2)`` array of
``(re, im)`` rows; ``transform`` answers in the same layout.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .boettcher import boettcher_psi, normalize_leading
from .coords import invert_near_identity
from .dilatation import beltrami_field, omega_curve, wirtinger
from .errors import WrongFixedPointClass
from .grids import PolarGrid
from .koenigs import ATTRACTING, REPELLING, classify_fixed_point, koenigs_psi
from .maps import EvalBudget
from .validation import check_map, check_points, check_thresholds, restore_layout


class KoenigsLinearizer(BaseEstimator, TransformerMixin):
    """Koenigs coordinate psi with ``psi(f(z)) = lambda psi(z)`` and ``psi'(0) = 1``.

    Parameters
    ----------
    map : MapSpec, dict or JSON text
    tol : float
        stopping tolerance of the adaptive limit
    max_iter : int
        iteration cap per point
    """

    def __init__(self, map=None, tol=1e-12, max_iter=200):
        self.map = map
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X=None, y=None):
        self.map_ = check_map(self.map)
        self.budget_ = EvalBudget(max_iterations=self.max_iter, tolerance=self.tol)
        self.report_ = classify_fixed_point(self.map_, self.budget_)
        if self.report_.fp_class not in (ATTRACTING, REPELLING):
            raise WrongFixedPointClass(f"no Koenigs coordinate at a {self.report_.fp_class} point")
        self.multiplier_ = self.report_.multiplier
        self.fp_class_ = self.report_.fp_class
        return self

    def transform(self, X):
        check_is_fitted(self, "map_")
        z, pairs = check_points(X)
        return restore_layout(koenigs_psi(self.map_, z, self.budget_), pairs)

    def inverse_transform(self, X):
        check_is_fitted(self, "map_")
        w, pairs = check_points(X)
        z = invert_near_identity(lambda u: koenigs_psi(self.map_, u, self.budget_), w)
        return restore_layout(z, pairs)


class BoettcherCoordinate(BaseEstimator, TransformerMixin):
    """Boettcher coordinate with ``psi(g(z)) = psi(z)**n``, ``psi'(0) = b``."""

    def __init__(self, map=None, tol=1e-12, max_iter=200):
        self.map = map
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X=None, y=None):
        self.map_ = check_map(self.map)
        self.budget_ = EvalBudget(max_iterations=self.max_iter, tolerance=self.tol)
        self.b_, self.g_tilde_ = normalize_leading(self.map_)
        self.degree_ = self.g_tilde_.leading_term()[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "map_")
        z, pairs = check_points(X)
        return restore_layout(boettcher_psi(self.map_, z, self.budget_), pairs)


class BeltramiEstimator(BaseEstimator, TransformerMixin):
    """Pointwise Beltrami coefficient ``mu = f_zbar / f_z`` by central differences."""

    def __init__(self, map=None, h=1e-6):
        self.map = map
        self.h = h

    def fit(self, X=None, y=None):
        self.map_ = self.map if callable(self.map) else check_map(self.map)
        return self

    def transform(self, X):
        check_is_fitted(self, "map_")
        z, pairs = check_points(X)
        fz, fzbar = wirtinger(self.map_, z, self.h)
        return restore_layout(fzbar / fz, pairs)


class OmegaModulus(BaseEstimator, TransformerMixin):
    """Fit the modulus ``omega(t) = sup_{|z| <= t} |mu(z)|`` on a log-polar grid.

    ``transform(t)`` evaluates the fitted curve at thresholds ``t``; the
    fitted ``integral_`` is ``int_0^{r_max} omega(s)/s ds`` (inf if the head
    does not decay).
    """

    def __init__(self, map=None, r_min=1e-4, r_max=1.0, rings=40, angles=64, noise_floor=1e-8):
        self.map = map
        self.r_min = r_min
        self.r_max = r_max
        self.rings = rings
        self.angles = angles
        self.noise_floor = noise_floor

    def fit(self, X=None, y=None):
        m = self.map if callable(self.map) else check_map(self.map)
        grid = PolarGrid.logspace(self.r_min, self.r_max, self.rings, self.angles)
        self.field_ = beltrami_field(m, grid)
        self.curve_ = omega_curve(self.field_, self.noise_floor)
        self.integral_ = self.curve_.integral_value
        self.divergent_ = self.curve_.divergent
        return self

    def transform(self, X):
        check_is_fitted(self, "curve_")
        t = check_thresholds(X)
        return np.asarray(self.curve_(t)).reshape(-1, 1)
