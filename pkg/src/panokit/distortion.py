"""Latitude-dependent distortion profiles and spatially-distorted noise.

An ERP row at vertical coordinate y in [0, H] sits at latitude
phi(y) = pi/2 - pi*y/H.  Horizontal stretch there is governed by

    D(y)     = cos(phi(y)) = sin(pi*y/H)      scale factor, 1 at the
                                              equator, 0 at the poles
    alpha(y) = 1 - D(y)                       modulation strength

Per-row grids (the profile, the distortion map, the noise sampler's
row scales) evaluate these at the *integer* row coordinate y = row, so
row 0 is exactly the north pole and row H/2 exactly the equator.

The distorted noise sampler stretches an i.i.d. Gaussian base field
horizontally about the image center, more strongly toward the poles:
output pixel (x, y) resamples the base row at

    x'(x, y) = W/2 + (x - W/2) * D(y)

with wrap-around linear interpolation, and the result is standardized
afterwards.  The base field is drawn from numpy's Philox4x64-10
counter-based generator seeded with the given integer, filled in C
order over the (C, H, W) array, so fixtures are reproducible bit for
bit from (shape, seed).
"""

from __future__ import annotations

import numpy as np


def _check_y(y, H: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0.0) or np.any(y > H):
        raise ValueError(f"y outside [0, {H}]")
    return y


def _sin_profile(y: np.ndarray, H: int) -> np.ndarray:
    # cos(pi/2 - pi*y/H) == sin(pi*y/H); folding y about H/2 keeps the
    # identity exact and makes the poles (y = 0, H) land on sin(0) = 0
    # and the equator on sin(pi/2) = 1 without rounding residue
    return np.sin(np.pi * np.minimum(y, H - y) / H)


def alpha_at(y, H: int):
    """Modulation strength alpha(y) = 1 - cos(pi/2 - pi*y/H), y in [0, H].

    Exactly 1 at the poles and 0 at the equator, symmetric about H/2.
    """
    y = _check_y(y, H)
    out = 1.0 - _sin_profile(y, H)
    return float(out) if out.ndim == 0 else out


def scale_factor(y, H: int):
    """Horizontal scale D(y) = cos(pi/2 - pi*y/H); D + alpha = 1 exactly."""
    y = _check_y(y, H)
    out = _sin_profile(y, H)
    return float(out) if out.ndim == 0 else out


def alpha_profile(H: int) -> np.ndarray:
    """Per-row alpha values, shape (H,), evaluated at y = row index."""
    return alpha_at(np.arange(H, dtype=np.float64), H)


def distortion_map(W: int, H: int) -> np.ndarray:
    """(H, W) map M_D(x, y) = 1 - D(y): rows constant, alpha broadcast."""
    if W != 2 * H:
        raise ValueError(f"ERP distortion map requires W = 2H, got W={W}, H={H}")
    return np.broadcast_to(alpha_profile(H)[:, None], (H, W)).copy()


def base_noise(channels: int, height: int, width: int, seed: int) -> np.ndarray:
    """The seeded i.i.d. standard-normal field the sampler stretches."""
    rng = np.random.Generator(np.random.Philox(seed))
    return rng.standard_normal((channels, height, width))


def distorted_noise(
    channels: int,
    height: int,
    width: int,
    seed: int,
    normalization: str = "global",
) -> np.ndarray:
    """Latitude-stretched Gaussian noise, shape (C, H, W).

    Steps: draw the seeded base field; resample every row at
    x' = W/2 + (x - W/2) * D(y) with horizontal-wrap linear
    interpolation (y unchanged); standardize to zero mean / unit
    variance — per channel over the whole image (``"global"``, the
    default) or per row (``"per-row"``).

    Deterministic per (shape, seed).  At the equator row D = 1, so the
    pre-normalization row equals the base row exactly; at the pole row
    D = 0 and the row is constant.
    """
    if width != 2 * height:
        raise ValueError(f"distorted noise requires W = 2H, got W={width}, H={height}")
    if normalization not in ("global", "per-row"):
        raise ValueError(f"unknown normalization {normalization!r}")
    base = base_noise(channels, height, width, seed)
    out = stretch_rows(base)
    if normalization == "global":
        mean = out.mean(axis=(1, 2), keepdims=True)
        std = out.std(axis=(1, 2), keepdims=True)
    else:
        mean = out.mean(axis=2, keepdims=True)
        std = out.std(axis=2, keepdims=True)
        # a constant row (the pole) standardizes to zeros, not 0/std-fuzz
        constant = out.max(axis=2, keepdims=True) == out.min(axis=2, keepdims=True)
        mean = np.where(constant, out.max(axis=2, keepdims=True), mean)
        std = np.where(constant, 1.0, std)
    return (out - mean) / std


def stretch_rows(field: np.ndarray) -> np.ndarray:
    """Resample each row of (C, H, W) at x' = W/2 + (x - W/2)*D(row).

    Wrap-around linear interpolation along x; rows where D = 1 are
    copied bitwise.
    """
    field = np.asarray(field, dtype=np.float64)
    C, H, W = field.shape
    d = scale_factor(np.arange(H, dtype=np.float64), H)
    xs = np.arange(W, dtype=np.float64)
    xp = W / 2.0 + (xs[None, :] - W / 2.0) * d[:, None]  # (H, W)
    x0 = np.floor(xp).astype(np.int64)
    t = xp - x0
    i0 = np.mod(x0, W)
    i1 = np.mod(x0 + 1, W)
    rows = np.arange(H)[:, None]
    left = field[:, rows, i0]
    right = field[:, rows, i1]
    return left * (1.0 - t) + right * t
