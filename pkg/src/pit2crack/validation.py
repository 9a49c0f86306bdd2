"""Input coercion shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np

from .history import StrainHistory
from .pitgen import HeightField


def check_histories(X) -> list[StrainHistory]:
    """Coerce ``X`` to a non-empty list of histories.

    Accepts one history, an iterable of histories, or an array shaped
    ``(n_steps, 12)`` or ``(n_locations, n_steps, 12)``: six strains with
    engineering shears, then six stresses in MPa.
    """
    if isinstance(X, StrainHistory):
        return [X]
    if isinstance(X, np.ndarray):
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3 or arr.shape[2] != 12:
            raise ValueError(f"history arrays must be (n_steps, 12) or (n, n_steps, 12), got {X.shape}")
        return [StrainHistory(str(i), a[:, :6], a[:, 6:]) for i, a in enumerate(arr)]
    try:
        items = list(X)
    except TypeError:
        raise TypeError(f"expected strain histories, got {type(X).__name__}") from None
    if not items:
        raise ValueError("no histories given")
    if all(isinstance(h, StrainHistory) for h in items):
        return items
    return check_histories(np.asarray(items, dtype=float))


def check_fields(X) -> list[HeightField]:
    """Coerce ``X`` to a non-empty list of heightfields."""
    if isinstance(X, HeightField):
        return [X]
    items = list(X)
    if not items:
        raise ValueError("no heightfields given")
    for f in items:
        if not isinstance(f, HeightField):
            raise TypeError(f"expected HeightField, got {type(f).__name__}")
    return items
