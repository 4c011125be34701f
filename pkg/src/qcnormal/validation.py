"""Input validation helpers shared by the estimator wrappers."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.utils.validation import check_array

from .errors import DegenerateInput
from .maps import MapSpec, map_from_dict


def check_points(X):
    """Return ``(z, as_pairs)`` for complex input or an ``(n, 2)`` real array.

    Complex input of any shape is flattened; real input must have two columns
    read as ``(re, im)``. ``as_pairs`` tells the caller which layout to give back.
    """
    arr = np.asarray(X)
    if np.iscomplexobj(arr):
        z = arr.astype(complex).ravel()
        if not np.all(np.isfinite(z)):
            raise ValueError("input contains non-finite points")
        return z, False
    arr = check_array(X, dtype=float, ensure_2d=True)
    if arr.shape[1] != 2:
        raise ValueError(f"real input needs two columns (re, im), got {arr.shape[1]}")
    return arr[:, 0] + 1j * arr[:, 1], True


def restore_layout(values, as_pairs: bool):
    values = np.asarray(values, dtype=complex).ravel()
    if as_pairs:
        return np.column_stack([values.real, values.imag])
    return values


def check_map(m) -> MapSpec:
    """Accept a MapSpec, its dict form, a JSON string or a path to a JSON file."""
    if isinstance(m, MapSpec):
        return m
    if isinstance(m, dict):
        return map_from_dict(m)
    if isinstance(m, (str, Path)):
        text = str(m)
        if not text.lstrip().startswith("{"):
            text = Path(m).read_text()
        return map_from_dict(json.loads(text))
    raise TypeError(f"cannot interpret {type(m).__name__} as a map")


def check_thresholds(t):
    t = np.asarray(t, dtype=float).ravel()
    if t.size == 0:
        raise DegenerateInput("no thresholds given")
    if np.any(t <= 0) or not np.all(np.isfinite(t)):
        raise DegenerateInput("thresholds must be positive and finite")
    return t
