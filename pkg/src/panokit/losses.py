"""Layered shape supervision: masks, soft IoU, compositing, losses, gradients.

The aggregate objective over K object layers is

    total = (1/K) * sum_k  coeff_k * (1 - IoU(M_pred_k, M_gt_k))
          + mean squared error between the composited image and the
            target, restricted to the union of the objects' boxes
            (or the full frame when no region is given).

Soft IoU is sum(min)/(sum(max) + eps), which coincides with set IoU on
binary masks and is differentiable away from elementwise ties.  All
gradients are analytic; :func:`gradient_check` verifies them against
central finite differences of the forward computation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .distortion import alpha_at
from .geometry import BBox, bbox_of_mask

IOU_EPS = 1e-8

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


class EmptyRegionError(ValueError):
    """Raised when a loss region contains no pixels."""


class EmptyAlphaWarning(UserWarning):
    """Signals that alpha extraction found no object (fully white input)."""


class NoLayersWarning(UserWarning):
    """Signals total_shape_loss with K = 0: the total is the recon term alone."""


class SubgradientWarning(UserWarning):
    """Signals gradients requested at min/max tie points of the soft IoU."""


def extract_alpha_white_bg(rgb: np.ndarray, whiteness_threshold: float = 0.98) -> np.ndarray:
    """Object mask of an RGB-on-white render.

    Near-white means every channel >= threshold (linear values).  The
    background is the near-white region 4-connected to the image
    border; the mask is its complement, so interior white holes that a
    dark ring separates from the border count as object.  A fully
    white image yields an empty mask and an EmptyAlphaWarning.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3:
        raise ValueError(f"expected (H, W, C) rgb, got shape {rgb.shape}")
    near_white = rgb.min(axis=2) >= whiteness_threshold
    labels, _ = ndimage.label(near_white, structure=FOUR_CONNECTED)
    border = np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
    border_ids = np.unique(border[border > 0])
    background = near_white & np.isin(labels, border_ids)
    mask = (~background).astype(np.float64)
    if not mask.any():
        warnings.warn("fully white image, empty object mask", EmptyAlphaWarning)
    return mask


def soft_iou(m_pred: np.ndarray, m_gt: np.ndarray) -> float:
    """sum(min)/(sum(max) + eps) over masks in [0, 1].

    Two empty masks agree perfectly and return 1.0.
    """
    a = np.asarray(m_pred, dtype=np.float64)
    b = np.asarray(m_gt, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = float(np.maximum(a, b).sum())
    if union == 0.0:
        return 1.0
    return float(np.minimum(a, b).sum()) / (union + IOU_EPS)


@dataclass(frozen=True, eq=False)
class ShapeTarget:
    """Ground-truth shape mask plus its latitude coefficient."""

    mask: np.ndarray
    coeff: float

    def __post_init__(self):
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=np.float64))
        if not 0.0 <= self.coeff <= 1.0:
            raise ValueError(f"coeff must lie in [0, 1], got {self.coeff}")


def shape_target(mask: np.ndarray, location: str = "centroid") -> ShapeTarget:
    """Build a ShapeTarget with coeff = alpha at the mask's anchor row.

    ``location``: "centroid" (mass-weighted mean row of the mask) or
    "bbox-center" (vertical center of its tight box).
    """
    mask = np.asarray(mask, dtype=np.float64)
    H = mask.shape[0]
    if location == "centroid":
        total = mask.sum()
        if total == 0.0:
            raise ValueError("cannot anchor an empty mask")
        row = float((np.arange(H)[:, None] * mask).sum() / total)
    elif location == "bbox-center":
        box = bbox_of_mask(mask, threshold=0.5)
        row = (box.y0 + box.y1) / 2.0
    else:
        raise ValueError(f"unknown location {location!r}")
    return ShapeTarget(mask, alpha_at(row, H))


def shape_loss_k(m_pred: np.ndarray, target: ShapeTarget) -> float:
    """Per-object shape term: coeff * (1 - soft IoU against the GT mask)."""
    return target.coeff * (1.0 - soft_iou(m_pred, target.mask))


@dataclass(frozen=True, eq=False)
class ObjectLayer:
    """Transparent render of one object: straight-alpha RGB over nothing."""

    rgb: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        rgb = np.asarray(self.rgb, dtype=np.float64)
        alpha = np.asarray(self.alpha, dtype=np.float64)
        if rgb.ndim != 3 or alpha.ndim != 2 or rgb.shape[:2] != alpha.shape:
            raise ValueError(f"layer shapes disagree: rgb {rgb.shape}, alpha {alpha.shape}")
        object.__setattr__(self, "rgb", rgb)
        object.__setattr__(self, "alpha", alpha)


def composite(src: np.ndarray, layers: list[ObjectLayer]) -> np.ndarray:
    """Over-composite layers onto ``src`` in list order (last on top)."""
    out = np.asarray(src, dtype=np.float64).copy()
    for k, layer in enumerate(layers):
        if layer.rgb.shape != out.shape:
            raise ValueError(f"layer {k} shape {layer.rgb.shape} != image {out.shape}")
        a = layer.alpha[:, :, None]
        out = a * layer.rgb + (1.0 - a) * out
    return out


def region_mask(shape: tuple[int, int], boxes: list[BBox] | None) -> np.ndarray:
    """Boolean mask of the union of (wrap-aware) boxes; None = full frame."""
    H, W = shape
    if boxes is None:
        return np.ones((H, W), dtype=bool)
    m = np.zeros((H, W), dtype=bool)
    for box in boxes:
        m[box.y0:box.y1, box.col_indices(W)] = True
    return m


def recon_loss(i_comp: np.ndarray, i_tgt: np.ndarray, boxes: list[BBox] | None = None) -> float:
    """MSE over the region's pixels; N = region pixel count x channels."""
    a = np.asarray(i_comp, dtype=np.float64)
    b = np.asarray(i_tgt, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    m = region_mask(a.shape[:2], boxes)
    n = int(m.sum())
    if n == 0:
        raise EmptyRegionError("loss region contains no pixels")
    diff = (a - b)[m]
    return float((diff * diff).sum() / diff.size)


@dataclass(frozen=True, eq=False)
class LossGradients:
    """Analytic per-pixel gradients of the total loss."""

    d_pred_masks: list[np.ndarray]
    d_layer_rgb: list[np.ndarray]
    d_layer_alpha: list[np.ndarray]
    tie_points: list[np.ndarray]


@dataclass(frozen=True, eq=False)
class LossReport:
    shape_losses: list[float]
    recon: float
    total: float
    gradients: LossGradients | None = None


def total_shape_loss(
    pred_masks: list[np.ndarray],
    targets: list[ShapeTarget],
    src: np.ndarray,
    layers: list[ObjectLayer],
    i_tgt: np.ndarray,
    boxes: list[BBox] | None = None,
    with_gradients: bool = False,
) -> LossReport:
    """Aggregate loss: mean per-object shape term plus reconstruction.

    With K = 0 layers the total is the recon term alone (flagged with
    NoLayersWarning).  Per-layer terms are reduced in list order so
    repeated runs are bitwise identical.
    """
    if len(pred_masks) != len(targets):
        raise ValueError("one ShapeTarget per predicted mask required")
    shape_losses = [shape_loss_k(m, t) for m, t in zip(pred_masks, targets)]
    i_comp = composite(src, layers)
    rec = recon_loss(i_comp, i_tgt, boxes)
    if shape_losses:
        total = sum(shape_losses) / len(shape_losses) + rec
    else:
        warnings.warn("no layers: total is the recon term alone", NoLayersWarning)
        total = rec
    grads = None
    if with_gradients:
        grads = loss_gradients(pred_masks, targets, src, layers, i_tgt, boxes)
    return LossReport(shape_losses, rec, total, grads)


def _iou_gradient(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """d soft_iou / d pred, plus the elementwise tie map (kink points)."""
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    s_min = np.minimum(p, g).sum()
    s_den = np.maximum(p, g).sum() + IOU_EPS
    # subgradient choice at ties: d min = d max = 0
    d_min = (p < g).astype(np.float64)
    d_max = (p > g).astype(np.float64)
    grad = (d_min * s_den - s_min * d_max) / (s_den * s_den)
    return grad, p == g


def loss_gradients(
    pred_masks: list[np.ndarray],
    targets: list[ShapeTarget],
    src: np.ndarray,
    layers: list[ObjectLayer],
    i_tgt: np.ndarray,
    boxes: list[BBox] | None = None,
) -> LossGradients:
    """Analytic gradients of the total loss.

    Returns d/d(pred mask) per object and d/d(rgb), d/d(alpha) per
    layer.  Elementwise pred == gt points are min/max kinks of the
    soft IoU; they are reported in ``tie_points`` (and warned about)
    and carry the zero subgradient.
    """
    K = len(pred_masks)
    d_pred, ties = [], []
    for m, t in zip(pred_masks, targets):
        g, tie = _iou_gradient(m, t.mask)
        d_pred.append(-(t.coeff / K) * g)
        ties.append(tie)
    if any(t.any() for t in ties):
        warnings.warn("soft-IoU gradient at tie points: zero subgradient used",
                      SubgradientWarning)

    src = np.asarray(src, dtype=np.float64)
    i_tgt = np.asarray(i_tgt, dtype=np.float64)
    under = [src]
    for layer in layers:
        a = layer.alpha[:, :, None]
        under.append(a * layer.rgb + (1.0 - a) * under[-1])
    i_comp = under[-1]
    m = region_mask(src.shape[:2], boxes)
    n = int(m.sum())
    if n == 0:
        raise EmptyRegionError("loss region contains no pixels")
    N = n * src.shape[2]
    g_comp = 2.0 * (i_comp - i_tgt) * m[:, :, None] / N
    # downstream transparency: d i_comp / d out_k = prod_{j>k} (1 - alpha_j)
    d_rgb, d_alpha = [], []
    for k, layer in enumerate(layers):
        w = np.ones(src.shape[:2], dtype=np.float64)
        for j in range(k + 1, len(layers)):
            w = w * (1.0 - layers[j].alpha)
        gw = g_comp * w[:, :, None]
        d_rgb.append(gw * layer.alpha[:, :, None])
        d_alpha.append((gw * (layer.rgb - under[k])).sum(axis=2))
    return LossGradients(d_pred, d_rgb, d_alpha, ties)


def gradient_check(
    pred_masks: list[np.ndarray],
    targets: list[ShapeTarget],
    src: np.ndarray,
    layers: list[ObjectLayer],
    i_tgt: np.ndarray,
    boxes: list[BBox] | None = None,
    step: float = 1e-4,
    sample: int | None = None,
    seed: int = 0,
) -> float:
    """Max relative error of analytic vs central-finite-difference gradients.

    Perturbs every coordinate (or ``sample`` random ones per array) of
    the pred masks and layer rgb/alpha by +-step and compares the
    centered difference of the forward loss against the analytic
    gradient.  Relative error is |fd - an| / max(|fd|, |an|, 1e-8).
    """

    def forward(pm, ly) -> float:
        report = total_shape_loss(pm, targets, src, ly, i_tgt, boxes)
        return report.total

    analytic = loss_gradients(pred_masks, targets, src, layers, i_tgt, boxes)
    rng = np.random.default_rng(seed)
    worst = 0.0

    def check(get_arrays, grads, rebuild):
        nonlocal worst
        for idx, grad in enumerate(grads):
            base = get_arrays(idx)
            coords = np.ndindex(*base.shape)
            if sample is not None:
                flat = rng.choice(base.size, size=min(sample, base.size), replace=False)
                coords = [np.unravel_index(i, base.shape) for i in flat]
            for c in coords:
                plus = base.copy()
                minus = base.copy()
                plus[c] += step
                minus[c] -= step
                f_plus = forward(*rebuild(idx, plus))
                f_minus = forward(*rebuild(idx, minus))
                fd = (f_plus - f_minus) / (2.0 * step)
                an = grad[c]
                err = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
                worst = max(worst, err)

    def rebuild_mask(idx, arr):
        pm = list(pred_masks)
        pm[idx] = arr
        return pm, layers

    def rebuild_rgb(idx, arr):
        ly = list(layers)
        ly[idx] = ObjectLayer(arr, layers[idx].alpha)
        return pred_masks, ly

    def rebuild_alpha(idx, arr):
        ly = list(layers)
        ly[idx] = ObjectLayer(layers[idx].rgb, arr)
        return pred_masks, ly

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        check(lambda i: np.asarray(pred_masks[i], dtype=np.float64), analytic.d_pred_masks, rebuild_mask)
        check(lambda i: layers[i].rgb, analytic.d_layer_rgb, rebuild_rgb)
        check(lambda i: layers[i].alpha, analytic.d_layer_alpha, rebuild_alpha)
    return worst
