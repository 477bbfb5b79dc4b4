"""Synthetic edit-pair construction for panorama editing datasets.

A deterministic compositor stands in for a generative model: a
reference object (perspective RGBA) is back-projected through a camera
aimed at a bounding box and over-composited onto the source panorama.
Five pair types come out of re-combinations of that one primitive:

    addition      source -> source with the object placed
    removal       the addition pair with roles swapped (bitwise)
    replacement   two different objects placed at the same box
    movement      the same object placed at two different boxes
    modification  an object and its variant placed at the same box

Pixels outside the projected footprints are bitwise identical across
each pair.  Instructions come from fixed templates filled with the
object identifier and a coarse region phrase derived from the box
center (left/center/right x upper/lower).

Manifests are JSON Lines: one record per triplet with fields
(edit_type, src, tgt, instruction, bboxes, object_ids); boxes are
[x0, y0, x1, y1] with x0 > x1 encoding seam wrap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    BBox,
    CameraPose,
    backproject_to_erp,
    bbox_of_mask,
    erp_to_direction,
)

EDIT_TYPES = ("addition", "removal", "replacement", "movement", "modification")

MAX_HFOV = math.radians(150.0)

TEMPLATES = {
    "addition": "Add a {object} to the {region}.",
    "removal": "Remove the {object} from the {region}.",
    "replacement": "Replace the {old_object} in the {region} with a {new_object}.",
    "movement": "Move the {object} from the {src_region} to the {dst_region}.",
    "modification": "Change the {object} in the {region} into a {variant}.",
}


class PoleBBoxError(ValueError):
    """The box's camera would cross a pole, outside the gnomonic model."""


class ManifestError(ValueError):
    """A manifest line failed to parse; carries line number and field."""


@dataclass(frozen=True, eq=False)
class ReferenceObject:
    """Perspective RGBA content to be placed, plus its identifier."""

    image: np.ndarray  # (h, w, 4), straight alpha in [0, 1]
    identifier: str

    def __post_init__(self):
        img = np.asarray(self.image, dtype=np.float64)
        if img.ndim != 3 or img.shape[2] != 4:
            raise ValueError(f"reference image must be (h, w, 4), got {img.shape}")
        alpha = img[:, :, 3]
        if alpha.min() < 0.0 or alpha.max() > 1.0:
            raise ValueError("alpha channel must lie in [0, 1]")
        if alpha.max() == 0.0:
            raise ValueError(f"reference {self.identifier!r} has empty alpha support")
        object.__setattr__(self, "image", img)


@dataclass(frozen=True)
class EditTriplet:
    """One manifest record of an edit pair."""

    edit_type: str
    src: str
    tgt: str
    instruction: str
    bboxes: tuple[BBox, ...]
    object_ids: tuple[str, ...]

    def __post_init__(self):
        if self.edit_type not in EDIT_TYPES:
            raise ValueError(f"unknown edit type {self.edit_type!r}")


@dataclass(eq=False)
class BuiltPair:
    """In-memory edit pair before images are written to disk."""

    edit_type: str
    src_img: np.ndarray
    tgt_img: np.ndarray
    instruction: str
    bboxes: list[BBox]
    object_ids: list[str]
    footprints: list[np.ndarray] = field(default_factory=list)
    shape_masks: list[np.ndarray] = field(default_factory=list)

    def to_triplet(self, src_path: str, tgt_path: str) -> EditTriplet:
        return EditTriplet(self.edit_type, src_path, tgt_path, self.instruction,
                           tuple(self.bboxes), tuple(self.object_ids))


def camera_for_bbox(bbox: BBox, W: int, H: int) -> CameraPose:
    """Camera whose frustum covers the box: aimed at its center, hfov
    from the box's angular width (capped at 150 degrees), vertical
    extent from its angular height."""
    cx, cy = bbox.center(W)
    lon, lat = erp_to_direction(cx, cy, W, H)
    hfov = min(bbox.width(W) / W * 2.0 * math.pi, MAX_HFOV)
    vfov = min(bbox.height() / H * math.pi, MAX_HFOV)
    if bbox.y0 <= 0 or bbox.y1 >= H:
        raise PoleBBoxError(f"bbox rows [{bbox.y0}, {bbox.y1}) touch a pole row")
    if abs(float(lat)) + vfov / 2.0 >= math.pi / 2.0 - 1e-6:
        raise PoleBBoxError("camera frustum would cross a pole")
    out_w = 256
    out_h = max(2, round(out_w * math.tan(vfov / 2.0) / math.tan(hfov / 2.0)))
    return CameraPose(yaw=float(lon), pitch=float(lat), roll=0.0,
                      hfov=hfov, out_width=out_w, out_height=out_h)


def _resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Plain separable bilinear resize with edge clamping (no wrap)."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    rr = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    cc = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    rr = np.clip(rr, 0, h - 1)
    cc = np.clip(cc, 0, w - 1)
    r0 = np.floor(rr).astype(int)
    c0 = np.floor(cc).astype(int)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    tr = (rr - r0)[:, None, None]
    tc = (cc - c0)[None, :, None]
    top = img[np.ix_(r0, c0)] * (1 - tc) + img[np.ix_(r0, c1)] * tc
    bot = img[np.ix_(r1, c0)] * (1 - tc) + img[np.ix_(r1, c1)] * tc
    return top * (1 - tr) + bot * tr


def place_object(src: np.ndarray, bbox: BBox, ref: ReferenceObject):
    """Composite a reference object into a panorama at a bounding box.

    Returns (tgt, footprint, shape_mask).  Outside the footprint the
    target is bitwise identical to the source; inside, the
    back-projected RGBA is over-composited.  The shape mask is the
    back-projected alpha.
    """
    src = np.asarray(src, dtype=np.float64)
    H, W = src.shape[:2]
    cam = camera_for_bbox(bbox, W, H)
    view = _resize_bilinear(ref.image, cam.out_height, cam.out_width)
    patch, footprint = backproject_to_erp(view, cam, W, H)
    rgb = patch[:, :, :3]
    alpha = patch[:, :, 3]
    inside = footprint > 0
    tgt = src.copy()
    a = alpha[inside][:, None]
    tgt[inside] = a * rgb[inside] + (1.0 - a) * src[inside]
    shape_mask = np.where(inside, alpha, 0.0)
    return tgt, footprint, shape_mask


def region_phrase(bbox: BBox, W: int, H: int) -> str:
    """Coarse location wording from the box center.

    Horizontal thirds of [0, W) give left / center / right; the
    vertical halves give upper / lower.
    """
    cx, cy = bbox.center(W)
    horiz = "left" if cx < W / 3 else ("center" if cx < 2 * W / 3 else "right")
    vert = "upper" if cy < H / 2 else "lower"
    return f"{vert} {horiz}"


def render_instruction(edit_type: str, slots: dict[str, str]) -> str:
    """Fill the documented template for an edit type; deterministic."""
    if edit_type not in TEMPLATES:
        raise ValueError(f"unknown edit type {edit_type!r}")
    missing = [k for k in _template_slots(edit_type) if not slots.get(k)]
    if missing:
        raise ValueError(f"missing slots for {edit_type}: {missing}")
    return TEMPLATES[edit_type].format(**slots)


def _template_slots(edit_type: str) -> list[str]:
    import string

    return [f for _, f, _, _ in string.Formatter().parse(TEMPLATES[edit_type]) if f]


def make_addition(src: np.ndarray, bbox: BBox, ref: ReferenceObject) -> BuiltPair:
    H, W = np.asarray(src).shape[:2]
    tgt, footprint, shape_mask = place_object(src, bbox, ref)
    instr = render_instruction("addition", {
        "object": ref.identifier, "region": region_phrase(bbox, W, H)})
    return BuiltPair("addition", np.asarray(src, dtype=np.float64), tgt, instr,
                     [bbox], [ref.identifier], [footprint], [shape_mask])


def make_removal(src: np.ndarray, bbox: BBox, ref: ReferenceObject) -> BuiltPair:
    """The addition pair with source and target swapped, bitwise."""
    H, W = np.asarray(src).shape[:2]
    add = make_addition(src, bbox, ref)
    instr = render_instruction("removal", {
        "object": ref.identifier, "region": region_phrase(bbox, W, H)})
    return BuiltPair("removal", add.tgt_img, add.src_img, instr,
                     [bbox], [ref.identifier], add.footprints, add.shape_masks)


def make_replacement(src: np.ndarray, bbox: BBox,
                     ref_old: ReferenceObject, ref_new: ReferenceObject) -> BuiltPair:
    """Two different objects placed at the same box form the pair."""
    if ref_old.identifier == ref_new.identifier:
        raise ValueError("replacement requires two distinct references")
    H, W = np.asarray(src).shape[:2]
    img_old, fp_old, sm_old = place_object(src, bbox, ref_old)
    img_new, fp_new, sm_new = place_object(src, bbox, ref_new)
    instr = render_instruction("replacement", {
        "old_object": ref_old.identifier, "new_object": ref_new.identifier,
        "region": region_phrase(bbox, W, H)})
    return BuiltPair("replacement", img_old, img_new, instr,
                     [bbox], [ref_old.identifier, ref_new.identifier],
                     [fp_old, fp_new], [sm_old, sm_new])


def make_movement(src: np.ndarray, bbox_from: BBox, bbox_to: BBox,
                  ref: ReferenceObject) -> BuiltPair:
    """The same object at two target locations; boxes may overlap."""
    H, W = np.asarray(src).shape[:2]
    img_a, fp_a, sm_a = place_object(src, bbox_from, ref)
    img_b, fp_b, sm_b = place_object(src, bbox_to, ref)
    instr = render_instruction("movement", {
        "object": ref.identifier,
        "src_region": region_phrase(bbox_from, W, H),
        "dst_region": region_phrase(bbox_to, W, H)})
    return BuiltPair("movement", img_a, img_b, instr,
                     [bbox_from, bbox_to], [ref.identifier],
                     [fp_a, fp_b], [sm_a, sm_b])


def make_modification(src: np.ndarray, bbox: BBox,
                      ref: ReferenceObject, variant: ReferenceObject) -> BuiltPair:
    """An object and its appearance variant at the same box."""
    H, W = np.asarray(src).shape[:2]
    img_a, fp_a, sm_a = place_object(src, bbox, ref)
    img_b, fp_b, sm_b = place_object(src, bbox, variant)
    instr = render_instruction("modification", {
        "object": ref.identifier, "variant": variant.identifier,
        "region": region_phrase(bbox, W, H)})
    return BuiltPair("modification", img_a, img_b, instr,
                     [bbox], [ref.identifier, variant.identifier],
                     [fp_a, fp_b], [sm_a, sm_b])


def sample_bbox(rng: np.random.Generator, W: int, H: int,
                lat_band: tuple[float, float] = (-1.0472, 1.0472),
                width_range: tuple[int, int] | None = None,
                height_range: tuple[int, int] | None = None) -> BBox:
    """Uniform box inside a latitude band (radians, default +-60 deg)."""
    if width_range is None:
        width_range = (W // 16, W // 5)
    if height_range is None:
        height_range = (H // 12, H // 4)
    lo = int(np.ceil(H * (0.5 - max(lat_band) / math.pi)))
    hi = int(np.floor(H * (0.5 - min(lat_band) / math.pi)))
    bw = int(rng.integers(width_range[0], width_range[1] + 1))
    bh = int(rng.integers(height_range[0], height_range[1] + 1))
    bh = min(bh, hi - lo - 1)
    y0 = int(rng.integers(max(lo, 1), max(lo + 1, hi - bh)))
    x0 = int(rng.integers(0, W))
    x1 = (x0 + bw) % W
    if x1 == x0:
        x1 = (x0 + 1) % W
    return BBox(x0, y0, x1, y0 + bh)


def write_manifest(triplets: list[EditTriplet], path) -> None:
    """One JSON record per line; field order fixed for diffability."""
    with open(path, "w", encoding="utf-8") as f:
        for t in triplets:
            rec = {
                "edit_type": t.edit_type,
                "src": t.src,
                "tgt": t.tgt,
                "instruction": t.instruction,
                "bboxes": [[b.x0, b.y0, b.x1, b.y1] for b in t.bboxes],
                "object_ids": list(t.object_ids),
            }
            f.write(json.dumps(rec, sort_keys=False) + "\n")


FIELDS = ("edit_type", "src", "tgt", "instruction", "bboxes", "object_ids")


def read_manifest(path) -> list[EditTriplet]:
    """Inverse of :func:`write_manifest`; malformed lines raise
    ManifestError naming the line and offending field."""
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestError(f"line {lineno}: invalid JSON ({e.msg})") from e
            for fname in FIELDS:
                if fname not in rec:
                    raise ManifestError(f"line {lineno}: missing field {fname!r}")
            try:
                boxes = tuple(BBox(*map(int, b)) for b in rec["bboxes"])
            except (TypeError, ValueError) as e:
                raise ManifestError(f"line {lineno}: field 'bboxes': {e}") from e
            out.append(EditTriplet(rec["edit_type"], rec["src"], rec["tgt"],
                                   rec["instruction"], boxes,
                                   tuple(rec["object_ids"])))
    return out
