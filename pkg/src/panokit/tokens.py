"""Conditioning-input layout and 3D rotary position encoding.

Latents are channel-first (C, h, w) float arrays.  A conditioning
bundle concatenates named channel blocks in a fixed, documented order
and carries a manifest so the blocks can be split back bitwise:

    stage-1 (global canvas):   (z_t, z_con, m)      with z_con = z_0 * (1 - m)
    stage-2 global, layer 0:   (z_t_tgt, z_src * (1 - m_union), m_union)
    stage-2 per object k >= 1: (z_t_k, z_ref_k, m_box_k)

Text-to-panorama is the degenerate case m == 1, which zeroes z_con.

Rotary encoding treats token positions as (layer_id, y, x): the
feature vector is split into three contiguous even-length segments,
and each segment is rotated pairwise by its own coordinate with
frequencies base**(-2i/d_axis) — the classic interleaved-pair
formulation, one axis at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BlockSpan:
    """One named block inside a bundle's channel stack."""

    name: str
    offset: int
    length: int
    layer_id: int


@dataclass(frozen=True, eq=False)
class ConditioningBundle:
    """Channel-concatenated latent blocks plus their manifest."""

    data: np.ndarray  # (C_total, h, w)
    manifest: tuple[BlockSpan, ...]
    layer_id: int

    def block(self, name: str) -> np.ndarray:
        for span in self.manifest:
            if span.name == name:
                return self.data[span.offset:span.offset + span.length]
        raise KeyError(name)

    def split(self) -> dict[str, np.ndarray]:
        return {s.name: self.data[s.offset:s.offset + s.length] for s in self.manifest}

    def manifest_lines(self) -> list[str]:
        """Line-oriented text records: name offset length layer_id."""
        return [f"{s.name} {s.offset} {s.length} {s.layer_id}" for s in self.manifest]


def _bundle(blocks: list[tuple[str, np.ndarray]], layer_id: int) -> ConditioningBundle:
    spans = []
    offset = 0
    for name, arr in blocks:
        spans.append(BlockSpan(name, offset, arr.shape[0], layer_id))
        offset += arr.shape[0]
    data = np.concatenate([arr for _, arr in blocks], axis=0)
    return ConditioningBundle(data, tuple(spans), layer_id)


def downsample_mask(mask: np.ndarray, factor: int) -> np.ndarray:
    """Max-pool a (H, W) mask over factor x factor blocks.

    Conservative coverage: any set pixel marks its latent cell.
    """
    mask = np.asarray(mask, dtype=np.float64)
    H, W = mask.shape
    if H % factor or W % factor:
        raise ValueError(f"mask {H}x{W} not divisible by factor {factor}")
    return mask.reshape(H // factor, factor, W // factor, factor).max(axis=(1, 3))


def downsample_mask_mean(mask: np.ndarray, factor: int, threshold: float = 0.5) -> np.ndarray:
    """Average-pool-then-threshold alternative to :func:`downsample_mask`."""
    mask = np.asarray(mask, dtype=np.float64)
    H, W = mask.shape
    if H % factor or W % factor:
        raise ValueError(f"mask {H}x{W} not divisible by factor {factor}")
    mean = mask.reshape(H // factor, factor, W // factor, factor).mean(axis=(1, 3))
    return (mean >= threshold).astype(np.float64)


def _check_latent(z: np.ndarray, name: str) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 3:
        raise ValueError(f"{name} must be (C, h, w), got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{name} contains non-finite values")
    return z


def build_stage1_input(z_t: np.ndarray, z_0: np.ndarray, m: np.ndarray) -> ConditioningBundle:
    """Global-canvas input: concat(z_t, z_0 * (1 - m), m), layer 0."""
    z_t = _check_latent(z_t, "z_t")
    z_0 = _check_latent(z_0, "z_0")
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 2:
        m = m[None]
    if z_t.shape != z_0.shape or m.shape[1:] != z_t.shape[1:]:
        raise ValueError(
            f"shape mismatch: z_t {z_t.shape}, z_0 {z_0.shape}, m {m.shape}"
        )
    z_con = z_0 * (1.0 - m)
    return _bundle([("z_t", z_t), ("z_con", z_con), ("m", m)], layer_id=0)


def union_mask(box_masks: list[np.ndarray]) -> np.ndarray:
    """Elementwise max over per-object box masks."""
    if not box_masks:
        raise ValueError("at least one box mask required")
    out = np.asarray(box_masks[0], dtype=np.float64)
    for m in box_masks[1:]:
        out = np.maximum(out, np.asarray(m, dtype=np.float64))
    return out


def build_stage2_inputs(
    z_tgt_t: np.ndarray,
    z_src: np.ndarray,
    layer_latents: list[np.ndarray],
    ref_latents: list[np.ndarray],
    box_masks: list[np.ndarray],
) -> list[ConditioningBundle]:
    """Layered inputs: global bundle (layer 0) plus one bundle per object.

    The global bundle is concat(z_tgt_t, z_src * (1 - m_union), m_union)
    with m_union the elementwise max of the box masks; object k's
    bundle is concat(z_t_k, z_ref_k, m_box_k) with layer_id k.
    """
    K = len(layer_latents)
    if K == 0:
        raise ValueError("stage-2 inputs require K >= 1 object layers")
    if len(ref_latents) != K or len(box_masks) != K:
        raise ValueError("layer latents, ref latents and box masks must align")
    masks = [np.asarray(m, dtype=np.float64) for m in box_masks]
    masks = [m[None] if m.ndim == 2 else m for m in masks]
    m_union = union_mask(masks)
    bundles = [_bundle(
        [("z_t", _check_latent(z_tgt_t, "z_tgt_t")),
         ("z_con", _check_latent(z_src, "z_src") * (1.0 - m_union)),
         ("m", m_union)],
        layer_id=0,
    )]
    for k in range(K):
        bundles.append(_bundle(
            [("z_t", _check_latent(layer_latents[k], f"layer latent {k}")),
             ("z_ref", _check_latent(ref_latents[k], f"ref latent {k}")),
             ("m", masks[k])],
            layer_id=k + 1,
        ))
    return bundles


def dropout_conditioning(
    ref_latents: list[np.ndarray],
    box_masks: list[np.ndarray],
    ref_rate: float,
    mask_rate: float,
    seed: int,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Stochastic conditioning dropout: per-element independent Bernoulli.

    A dropped reference latent becomes zeros; a dropped box mask
    becomes all-ones (no spatial constraint).  Deterministic per seed.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    refs_out, masks_out = [], []
    for z in ref_latents:
        z = np.asarray(z, dtype=np.float64)
        refs_out.append(np.zeros_like(z) if rng.random() < ref_rate else z)
    for m in box_masks:
        m = np.asarray(m, dtype=np.float64)
        masks_out.append(np.ones_like(m) if rng.random() < mask_rate else m)
    return refs_out, masks_out


def default_rope_split(dim: int) -> tuple[int, int, int]:
    """(d_layer, d_y, d_x) summing to dim, each even; spatial axes get 3/8."""
    if dim % 2:
        raise ValueError(f"feature dim must be even, got {dim}")
    d_layer = dim // 4
    d_layer -= d_layer % 2
    rest = dim - d_layer
    d_y = rest // 2
    d_y -= d_y % 2
    return d_layer, d_y, rest - d_y


def _rotate_pairs(seg: np.ndarray, pos: float, base: float) -> np.ndarray:
    d = seg.shape[-1]
    freqs = base ** (-2.0 * np.arange(d // 2, dtype=np.float64) / d)
    ang = pos * freqs
    cos, sin = np.cos(ang), np.sin(ang)
    even, odd = seg[..., 0::2], seg[..., 1::2]
    out = np.empty_like(seg)
    out[..., 0::2] = even * cos - odd * sin
    out[..., 1::2] = even * sin + odd * cos
    return out


def rope3d_apply(
    vec: np.ndarray,
    pos: tuple[int, int, int],
    dims: tuple[int, int, int] | None = None,
    base: float = 10000.0,
) -> np.ndarray:
    """Rotate a feature vector by its (layer_id, y, x) token position.

    ``dims`` splits the vector into contiguous per-axis segments (each
    even, summing to the vector length); defaults via
    :func:`default_rope_split`.  Rotations preserve the norm exactly
    and depend on positions only through per-axis differences.
    """
    vec = np.asarray(vec, dtype=np.float64)
    d = vec.shape[-1]
    if dims is None:
        dims = default_rope_split(d)
    d_layer, d_y, d_x = dims
    if d_layer + d_y + d_x != d:
        raise ValueError(f"dims {dims} do not sum to vector length {d}")
    if any(dd % 2 for dd in dims):
        raise ValueError(f"each axis dimension must be even, got {dims}")
    layer_id, y, x = pos
    out = np.empty_like(vec)
    edges = (0, d_layer, d_layer + d_y, d)
    for (lo, hi), p in zip(zip(edges[:-1], edges[1:]), (layer_id, y, x)):
        if hi > lo:
            out[..., lo:hi] = _rotate_pairs(vec[..., lo:hi], float(p), base)
    return out
