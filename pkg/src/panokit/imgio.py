"""PNG and PFM image file I/O.

Two formats only:

* 8-bit PNG, assumed sRGB-encoded on disk.  Loading converts to linear
  floats in [0, 1]; saving applies the inverse transfer curve and
  quantizes to 8 bits.  An alpha channel, when present, is treated as
  linear (straight division by 255).
* PFM (Portable FloatMap), always written little-endian (negative scale
  field), rows stored bottom-to-top per the format spec.  Float arrays
  are exchanged channel-first: (H, W) or (1, H, W) maps to ``Pf``,
  (3, H, W) to ``PF``, and any other (C, H, W) to a ``Pf`` file with
  the channels stacked vertically (channel-major), i.e. a C*H x W
  grayscale map.  ``read_pfm(channels=C)`` undoes the stacking.
"""

from __future__ import annotations

import numpy as np
from PIL import Image


def srgb_to_linear(s: np.ndarray) -> np.ndarray:
    """sRGB electro-optical transfer: encoded [0,1] -> linear [0,1]."""
    s = np.asarray(s, dtype=np.float64)
    return np.where(s <= 0.04045, s / 12.92, ((s + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(lin: np.ndarray) -> np.ndarray:
    """Inverse of :func:`srgb_to_linear`; input clipped to [0,1]."""
    lin = np.clip(np.asarray(lin, dtype=np.float64), 0.0, 1.0)
    return np.where(lin <= 0.0031308, lin * 12.92, 1.055 * lin ** (1.0 / 2.4) - 0.055)


def load_png(path) -> np.ndarray:
    """Load an 8-bit PNG as linear floats, shape (H, W, C).

    Color channels pass through the sRGB decoding curve; an alpha
    channel is scaled linearly.
    """
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB", "RGBA", "LA"):
            im = im.convert("RGBA" if "A" in im.mode else "RGB")
        arr = np.asarray(im, dtype=np.float64) / 255.0
    if arr.ndim == 2:
        arr = arr[:, :, None]
    out = np.empty_like(arr)
    ncolor = {1: 1, 2: 1, 3: 3, 4: 3}[arr.shape[2]]
    out[:, :, :ncolor] = srgb_to_linear(arr[:, :, :ncolor])
    out[:, :, ncolor:] = arr[:, :, ncolor:]
    return out


def save_png(path, img: np.ndarray) -> None:
    """Save linear floats (H, W) or (H, W, C) with C in {1, 3, 4} as 8-bit PNG."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    c = img.shape[2]
    if c not in (1, 3, 4):
        raise ValueError(f"PNG supports 1, 3 or 4 channels, got {c}")
    enc = np.empty_like(img)
    ncolor = 1 if c == 1 else 3
    enc[:, :, :ncolor] = linear_to_srgb(img[:, :, :ncolor])
    enc[:, :, ncolor:] = np.clip(img[:, :, ncolor:], 0.0, 1.0)
    data = np.round(enc * 255.0).astype(np.uint8)
    mode = {1: "L", 3: "RGB", 4: "RGBA"}[c]
    if c == 1:
        data = data[:, :, 0]
    Image.fromarray(data, mode=mode).save(path, format="PNG")


def write_pfm(path, data: np.ndarray) -> None:
    """Write (H, W) or channel-first (C, H, W) float data as little-endian PFM."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        plane, color = data, False
    elif data.ndim == 3:
        c, h, w = data.shape
        if c == 3:
            plane, color = np.moveaxis(data, 0, 2), True
        elif c == 1:
            plane, color = data[0], False
        else:
            plane, color = data.reshape(c * h, w), False
    else:
        raise ValueError(f"unsupported PFM shape {data.shape}")
    h, w = plane.shape[:2]
    with open(path, "wb") as f:
        f.write(b"PF\n" if color else b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        # PFM stores rows bottom-to-top.
        f.write(np.ascontiguousarray(plane[::-1]).astype("<f4").tobytes())


def read_pfm(path, channels: int | None = None) -> np.ndarray:
    """Read a PFM file.

    Without ``channels``: returns (H, W) for Pf and image-layout
    (H, W, 3) for PF.  With ``channels=C``: returns channel-first
    (C, H, W); a stacked Pf payload is un-stacked, and C must match
    what the file was written with.
    """
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic not in (b"PF", b"Pf"):
            raise ValueError(f"not a PFM file: magic {magic!r}")
        color = magic == b"PF"
        dims = f.readline().split()
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        count = w * h * (3 if color else 1)
        raw = f.read(count * 4)
    if len(raw) != count * 4:
        raise ValueError("truncated PFM payload")
    dtype = "<f4" if scale < 0 else ">f4"
    flat = np.frombuffer(raw, dtype=dtype).astype(np.float32)
    if color:
        if channels not in (None, 3):
            raise ValueError(f"PF file holds 3 channels, asked for {channels}")
        img = flat.reshape(h, w, 3)[::-1].copy()
        return np.moveaxis(img, 2, 0).copy() if channels == 3 else img
    plane = flat.reshape(h, w)[::-1].copy()
    if channels is None:
        return plane
    if h % channels != 0:
        raise ValueError(f"stacked height {h} not divisible by channels={channels}")
    return plane.reshape(channels, h // channels, w)
