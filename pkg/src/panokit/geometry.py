"""Sphere <-> plane projections for equirectangular (ERP) panoramas.

Coordinate conventions, fixed once here and used everywhere:

* An ERP image is a (H, W, C) float array with W = 2H.  Column x spans
  longitude, row y spans latitude.
* Continuous image coordinates run over [0, W] x [0, H]; the center of
  pixel (col, row) sits at continuous (col + 0.5, row + 0.5).
* Continuous (x, y) maps to direction via
      lon = 2*pi*x/W - pi          (wraps modulo 2*pi into [-pi, pi))
      lat = pi/2 - pi*y/H          (y in [0, H]; y=0 north pole)
* Unit-sphere 3-vectors are right-handed with +z at (lon=0, lat=0),
  +x at lon=+pi/2 on the equator, and +y at the north pole:
      v = (cos(lat)*sin(lon), sin(lat), cos(lat)*cos(lon))
* Bilinear sampling takes *pixel-center index* coordinates: integer
  (col, row) lands exactly on stored pixel (col, row).  Horizontal
  sampling wraps circularly; vertical sampling clamps to [0, H-1]
  (poles do not wrap).

Cube-map face convention (right-handed, +z front, +y up).  Face pixel
(u, v) with a = 2*(u+0.5)/F - 1, b = 2*(v+0.5)/F - 1 maps to the ray:

    face    ray (before normalization)
    front   ( a, -b,  1)
    right   ( 1, -b, -a)
    back    (-a, -b, -1)
    left    (-1, -b,  a)
    up      ( a,  1,  b)
    down    ( a, -1, -b)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FACE_NAMES = ("front", "right", "back", "left", "up", "down")


class EmptyMaskError(ValueError):
    """Raised when a mask has no pixel above the requested threshold."""


def _check_erp_dims(W: int, H: int) -> None:
    if W != 2 * H:
        raise ValueError(f"ERP images require W = 2H, got W={W}, H={H}")


def wrap_lon(lon):
    """Wrap longitudes into [-pi, pi)."""
    return np.mod(np.asarray(lon, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi


def erp_to_direction(col, row, W: int, H: int):
    """Continuous ERP coordinates -> (lon, lat) in radians.

    ``col`` wraps; ``row`` must lie in [0, H].
    """
    _check_erp_dims(W, H)
    col = np.asarray(col, dtype=np.float64)
    row = np.asarray(row, dtype=np.float64)
    if np.any(row < 0.0) or np.any(row > H):
        raise ValueError(f"row outside [0, {H}]")
    lon = wrap_lon(2.0 * np.pi * col / W - np.pi)
    lat = np.pi / 2.0 - np.pi * row / H
    return lon, lat


def direction_to_erp(lon, lat, W: int, H: int):
    """(lon, lat) -> continuous ERP coordinates (col in [0, W), row in [0, H])."""
    _check_erp_dims(W, H)
    lon = wrap_lon(lon)
    lat = np.asarray(lat, dtype=np.float64)
    col = (lon + np.pi) * W / (2.0 * np.pi)
    row = (np.pi / 2.0 - lat) * H / np.pi
    return col, row


def direction_to_vector(lon, lat) -> np.ndarray:
    """(lon, lat) -> unit 3-vector(s), stacked on the last axis."""
    lon = np.asarray(lon, dtype=np.float64)
    lat = np.asarray(lat, dtype=np.float64)
    cl = np.cos(lat)
    return np.stack([cl * np.sin(lon), np.sin(lat), cl * np.cos(lon)], axis=-1)


def vector_to_direction(v: np.ndarray):
    """Unit (or any nonzero) 3-vector(s) -> (lon, lat)."""
    v = np.asarray(v, dtype=np.float64)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    lon = np.arctan2(x, z)
    lat = np.arctan2(y, np.hypot(x, z))
    return wrap_lon(lon), lat


@dataclass(frozen=True)
class CameraPose:
    """Gnomonic (rectilinear) view on the sphere.

    yaw/pitch/roll in radians; hfov strictly inside (0, pi).  At
    yaw=pitch=roll=0 the camera looks along +z (lon=0, lat=0) with +y
    up.  Positive yaw turns toward +lon, positive pitch toward +lat.
    """

    yaw: float
    pitch: float
    roll: float = 0.0
    hfov: float = math.pi / 2.0
    out_width: int = 256
    out_height: int = 256

    def __post_init__(self):
        if not (0.0 < self.hfov < math.pi):
            raise ValueError(f"hfov must lie strictly inside (0, pi), got {self.hfov}")
        if self.out_width < 1 or self.out_height < 1:
            raise ValueError("output size must be positive")

    def rotation(self) -> np.ndarray:
        """World-from-camera rotation: R_y(yaw) @ R_x(-pitch) @ R_z(roll)."""
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        cp, sp = math.cos(-self.pitch), math.sin(-self.pitch)
        cr, sr = math.cos(self.roll), math.sin(self.roll)
        ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
        rx = np.array([[1, 0, 0], [0, cp, -sp], [0, sp, cp]])
        rz = np.array([[cr, -sr, 0], [sr, cr, 0], [0, 0, 1]])
        return ry @ rx @ rz

    def focal(self) -> float:
        """Focal length in output pixels."""
        return (self.out_width / 2.0) / math.tan(self.hfov / 2.0)

    def tan_half_fovs(self) -> tuple[float, float]:
        """(tan(hfov/2), tan(vfov/2)); vfov follows from the aspect ratio."""
        tx = math.tan(self.hfov / 2.0)
        return tx, tx * self.out_height / self.out_width


def sample_bilinear(img: np.ndarray, col, row) -> np.ndarray:
    """Bilinear sample at pixel-center index coordinates.

    ``col`` wraps modulo W; ``row`` clamps to [0, H-1].  Integer inputs
    return the stored pixel exactly.  Returns (..., C).
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    H, W = img.shape[:2]
    col = np.mod(np.asarray(col, dtype=np.float64), W)
    row = np.clip(np.asarray(row, dtype=np.float64), 0.0, H - 1.0)
    c0 = np.floor(col).astype(np.int64)
    r0 = np.floor(row).astype(np.int64)
    tc = col - c0
    tr = row - r0
    c0 = np.mod(c0, W)
    c1 = np.mod(c0 + 1, W)
    r0 = np.clip(r0, 0, H - 1)
    r1 = np.clip(r0 + 1, 0, H - 1)
    tc = tc[..., None]
    tr = tr[..., None]
    top = img[r0, c0] * (1.0 - tc) + img[r0, c1] * tc
    bot = img[r1, c0] * (1.0 - tc) + img[r1, c1] * tc
    return top * (1.0 - tr) + bot * tr


def sample_erp(img: np.ndarray, lon, lat) -> np.ndarray:
    """Sample an ERP image at directions, bilinear with horizontal wrap."""
    H, W = img.shape[:2]
    col, row = direction_to_erp(lon, lat, W, H)
    # continuous -> pixel-center index coordinates
    return sample_bilinear(img, col - 0.5, row - 0.5)


def _camera_rays(cam: CameraPose) -> np.ndarray:
    """World-space ray directions for every output pixel, (h, w, 3)."""
    f = cam.focal()
    xs = (np.arange(cam.out_width) + 0.5) - cam.out_width / 2.0
    ys = cam.out_height / 2.0 - (np.arange(cam.out_height) + 0.5)
    xg, yg = np.meshgrid(xs, ys)
    rays = np.stack([xg, yg, np.full_like(xg, f)], axis=-1)
    rays = rays / np.linalg.norm(rays, axis=-1, keepdims=True)
    return rays @ cam.rotation().T


def project_to_perspective(img: np.ndarray, cam: CameraPose) -> np.ndarray:
    """Render a gnomonic perspective view of an ERP panorama.

    Each output pixel bilinearly samples the ERP image at the
    coordinates its ray passes through.
    """
    H, W = img.shape[:2]
    _check_erp_dims(W, H)
    lon, lat = vector_to_direction(_camera_rays(cam))
    return sample_erp(img, lon, lat)


def backproject_to_erp(persp: np.ndarray, cam: CameraPose, W: int, H: int):
    """Back-project a perspective image into ERP space.

    The image plane geometry (focal length, vertical half-angle) is
    derived from the perspective image's own pixel dimensions and
    ``cam.hfov``, so any image shot with this camera maps back
    consistently.  Returns (patch, footprint): ``footprint`` is 1.0
    exactly where the ERP pixel-center direction lies inside the
    frustum, and ``patch`` holds bilinear samples of ``persp`` there
    (0 elsewhere; perspective sampling clamps at image borders).
    """
    _check_erp_dims(W, H)
    persp = np.asarray(persp, dtype=np.float64)
    if persp.ndim == 2:
        persp = persp[:, :, None]
    ph, pw = persp.shape[:2]
    cols, rows = np.meshgrid(np.arange(W) + 0.5, np.arange(H) + 0.5)
    lon, lat = erp_to_direction(cols, rows, W, H)
    dirs = direction_to_vector(lon, lat)
    cam_dirs = dirs @ cam.rotation()  # R^T applied to rows
    x, y, z = cam_dirs[..., 0], cam_dirs[..., 1], cam_dirs[..., 2]
    tx = math.tan(cam.hfov / 2.0)
    ty = tx * ph / pw
    with np.errstate(divide="ignore", invalid="ignore"):
        u = x / z
        v = y / z
    inside = (z > 0) & (np.abs(u) <= tx) & (np.abs(v) <= ty)
    footprint = inside.astype(np.float64)
    f = (pw / 2.0) / tx
    pc = u * f + pw / 2.0 - 0.5   # pixel-center index coords in persp image
    pr = ph / 2.0 - v * f - 0.5
    patch = np.zeros((H, W, persp.shape[2]), dtype=np.float64)
    if np.any(inside):
        pc_in = np.clip(pc[inside], 0.0, pw - 1.0)
        pr_in = np.clip(pr[inside], 0.0, ph - 1.0)
        patch[inside] = sample_bilinear(persp, pc_in, pr_in)
    return patch, footprint


def _face_rays(face: str, F: int) -> np.ndarray:
    """Unnormalized rays for every pixel of one cube face, (F, F, 3)."""
    t = (np.arange(F) + 0.5) * 2.0 / F - 1.0
    a, b = np.meshgrid(t, t)
    one = np.ones_like(a)
    table = {
        "front": (a, -b, one),
        "right": (one, -b, -a),
        "back": (-a, -b, -one),
        "left": (-one, -b, a),
        "up": (a, one, b),
        "down": (a, -one, -b),
    }
    return np.stack(table[face], axis=-1)


def erp_to_cubemap(img: np.ndarray, F: int) -> dict[str, np.ndarray]:
    """Resample an ERP panorama into six F x F cube faces."""
    if F < 2:
        raise ValueError(f"face size must be >= 2, got {F}")
    H, W = img.shape[:2]
    _check_erp_dims(W, H)
    cube = {}
    for face in FACE_NAMES:
        lon, lat = vector_to_direction(_face_rays(face, F))
        cube[face] = sample_erp(img, lon, lat)
    return cube


def cubemap_to_erp(cube: dict[str, np.ndarray], W: int, H: int) -> np.ndarray:
    """Resample a cube map back to an ERP panorama.

    Each ERP pixel samples the face its direction's dominant axis
    selects; face sampling clamps at face edges.
    """
    _check_erp_dims(W, H)
    F = cube["front"].shape[0]
    for face in FACE_NAMES:
        if cube[face].shape[0] != F or cube[face].shape[1] != F:
            raise ValueError("all cube faces must be square and equally sized")
    cols, rows = np.meshgrid(np.arange(W) + 0.5, np.arange(H) + 0.5)
    lon, lat = erp_to_direction(cols, rows, W, H)
    v = direction_to_vector(lon, lat)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    ax, ay, az = np.abs(x), np.abs(y), np.abs(z)
    C = np.asarray(cube["front"]).shape[2] if np.asarray(cube["front"]).ndim == 3 else 1
    out = np.zeros((H, W, C), dtype=np.float64)
    # (a, b) per face inverts the _face_rays table
    selectors = {
        "front": ((az >= ax) & (az >= ay) & (z > 0), lambda: (x / az, -y / az)),
        "back": ((az >= ax) & (az >= ay) & (z <= 0), lambda: (-x / az, -y / az)),
        "right": ((ax > az) & (ax >= ay) & (x > 0), lambda: (-z / ax, -y / ax)),
        "left": ((ax > az) & (ax >= ay) & (x <= 0), lambda: (z / ax, -y / ax)),
        "up": ((ay > ax) & (ay > az) & (y > 0), lambda: (x / ay, z / ay)),
        "down": ((ay > ax) & (ay > az) & (y <= 0), lambda: (x / ay, -z / ay)),
    }
    for face, (sel, ab) in selectors.items():
        if not np.any(sel):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            a, b = ab()
        u = (a[sel] + 1.0) * F / 2.0 - 0.5
        vv = (b[sel] + 1.0) * F / 2.0 - 0.5
        u = np.clip(u, 0.0, F - 1.0)
        vv = np.clip(vv, 0.0, F - 1.0)
        face_img = np.asarray(cube[face], dtype=np.float64)
        if face_img.ndim == 2:
            face_img = face_img[:, :, None]
        # no wrap within a face: clamp both axes via plain bilinear on
        # clamped coordinates (u, vv already inside [0, F-1])
        c0 = np.floor(u).astype(np.int64)
        r0 = np.floor(vv).astype(np.int64)
        tc = (u - c0)[:, None]
        tr = (vv - r0)[:, None]
        c1 = np.minimum(c0 + 1, F - 1)
        r1 = np.minimum(r0 + 1, F - 1)
        top = face_img[r0, c0] * (1 - tc) + face_img[r0, c1] * tc
        bot = face_img[r1, c0] * (1 - tc) + face_img[r1, c1] * tc
        out[sel] = top * (1 - tr) + bot * tr
    return out


@dataclass(frozen=True)
class BBox:
    """Axis-aligned ERP pixel box with exclusive upper bounds.

    x0 > x1 encodes a box wrapping across the longitude seam; the
    x-extent is then [x0, W) followed by [0, x1).
    """

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.y1 <= self.y0:
            raise ValueError("bbox height must be strictly positive")
        if self.x0 == self.x1:
            raise ValueError("bbox width must be strictly positive")

    def width(self, W: int) -> int:
        return (self.x1 - self.x0) % W if self.x0 > self.x1 else self.x1 - self.x0

    def height(self) -> int:
        return self.y1 - self.y0

    def wraps(self) -> bool:
        return self.x0 > self.x1

    def col_indices(self, W: int) -> np.ndarray:
        """Columns covered, in left-to-right order starting at x0."""
        return np.mod(np.arange(self.x0, self.x0 + self.width(W)), W)

    def center(self, W: int) -> tuple[float, float]:
        """(col, row) of the box center in continuous coordinates."""
        cx = (self.x0 + self.width(W) / 2.0) % W
        return cx, (self.y0 + self.y1) / 2.0


def bbox_of_mask(mask: np.ndarray, threshold: float = 0.5) -> BBox:
    """Tightest wrap-aware box containing all pixels >= threshold.

    Of the two horizontal interpretations (plain vs. wrapping through
    the seam) the narrower one wins.
    """
    mask = np.asarray(mask)
    on = mask >= threshold
    if not np.any(on):
        raise EmptyMaskError("mask has no pixel above threshold")
    rows = np.any(on, axis=1)
    y0 = int(np.argmax(rows))
    y1 = int(len(rows) - np.argmax(rows[::-1]))
    cols = np.any(on, axis=0)
    W = cols.size
    occupied = np.flatnonzero(cols)
    if occupied.size == W:
        return BBox(0, y0, W, y1)
    # widest circular run of empty columns; the box is its complement
    empty = np.flatnonzero(~cols)
    runs = []  # (gap_length, first_empty_col)
    start = prev = int(empty[0])
    for c in empty[1:]:
        if c == prev + 1:
            prev = int(c)
        else:
            runs.append((prev - start + 1, start))
            start = prev = int(c)
    runs.append((prev - start + 1, start))
    # merge a run touching the right edge with one touching the left
    if len(runs) > 1 and runs[0][1] == 0 and runs[-1][1] + runs[-1][0] == W:
        glen, gstart = runs.pop()
        runs[0] = (runs[0][0] + glen, gstart)
    gap_len, gap_start = max(runs)
    x0 = (gap_start + gap_len) % W
    x1 = gap_start
    return BBox(x0, y0, x1, y1)  # x0 > x1 means the box wraps


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0, mask: np.ndarray | None = None) -> float:
    """Peak signal-to-noise ratio in dB, optionally restricted to a mask."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = (a - b) ** 2
    if mask is not None:
        m = np.asarray(mask) > 0
        if d.ndim == 3:
            m = np.broadcast_to(m[:, :, None], d.shape)
        d = d[m]
    mse = float(np.mean(d))
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(peak * peak / mse)
