"""Distortion-aware residual modulation of attention maps.

An attention map A with extrema (a_min, a_max) is pulled toward a_max
inside an object mask M and toward a_min outside it, with per-pixel
strength alpha taken from the latitude profile:

    R  = alpha * (M * (a_max - A) - (1 - M) * (A - a_min))
    A' = A + R

For binary M and alpha in [0, 1], A' is a convex combination of A and
one of the extrema, so a_min <= A' <= a_max and the extrema are fixed
points (R = 0 where A already sits at the pulled-to bound).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .distortion import alpha_at


class DegenerateMapWarning(UserWarning):
    """Signals a constant attention map (a_min == a_max): residual is zero."""


@dataclass(frozen=True, eq=False)
class AttentionMap:
    """Attention values plus the extrema modulation pulls toward."""

    values: np.ndarray
    a_min: float
    a_max: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if np.any(v < self.a_min) or np.any(v > self.a_max):
            raise ValueError("attention values outside [a_min, a_max]")

    @classmethod
    def from_values(cls, values) -> "AttentionMap":
        """Build with the map's own min/max as the extrema."""
        v = np.asarray(values, dtype=np.float64)
        return cls(v, float(v.min()), float(v.max()))

    @property
    def degenerate(self) -> bool:
        return self.a_min == self.a_max


def attention_alpha_grid(h: int, w: int) -> np.ndarray:
    """Latitude-profile alpha evaluated at an attention grid's own rows.

    The attention grid spans the same vertical extent as the image, so
    row r of h rows sits at relative latitude coordinate r/h of the
    profile; this equals alpha_at(r, h), exact rather than resampled.
    """
    return np.broadcast_to(alpha_at(np.arange(h, dtype=np.float64), h)[:, None], (h, w)).copy()


def modulation_residual(amap: AttentionMap, mask, alpha) -> np.ndarray:
    """Residual R = alpha * (M*(a_max - A) - (1-M)*(A - a_min)).

    Shapes of the map, mask and alpha grid must agree.  A constant map
    (a_min == a_max) yields a zero residual and a DegenerateMapWarning.
    """
    A = amap.values
    M = np.asarray(mask, dtype=np.float64)
    al = np.asarray(alpha, dtype=np.float64)
    if A.shape != M.shape or A.shape != al.shape:
        raise ValueError(
            f"shape mismatch: A {A.shape}, mask {M.shape}, alpha {al.shape}"
        )
    if amap.degenerate:
        warnings.warn("constant attention map, residual is zero", DegenerateMapWarning)
        return np.zeros_like(A)
    return al * (M * (amap.a_max - A) - (1.0 - M) * (A - amap.a_min))


def apply_modulation(amap: AttentionMap, residual: np.ndarray) -> np.ndarray:
    """A' = A + R for a residual produced by :func:`modulation_residual`."""
    R = np.asarray(residual, dtype=np.float64)
    if R.shape != amap.values.shape:
        raise ValueError(f"residual shape {R.shape} != map shape {amap.values.shape}")
    return amap.values + R


def modulate(amap: AttentionMap, mask, alpha) -> np.ndarray:
    """Convenience: residual + apply in one call."""
    return apply_modulation(amap, modulation_residual(amap, mask, alpha))
