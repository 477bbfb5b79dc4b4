"""Command-line interface: one subcommand per subsystem.

Conventions: data goes to files (or stdout for tables/reports),
diagnostics to stderr.  Exit codes: 0 success, 1 operation error,
2 usage error.  Every run with identical flags and inputs produces
bitwise-identical outputs; ``--seed`` controls all randomness.

Images are read/written by extension: .png (8-bit sRGB, linear floats
in memory) or .pfm (little-endian float, channel-first convention of
panokit.imgio).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import attention, curriculum, distortion, losses, pairs, seam, tokens
from . import geometry
from .imgio import load_png, read_pfm, save_png, write_pfm


def _load_image(path: str) -> np.ndarray:
    """Load in image layout: (H, W) or (H, W, C)."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    if p.suffix.lower() == ".png":
        return load_png(p)
    return read_pfm(p)


def _load_latent(path: str, channels: int | None = None) -> np.ndarray:
    """Load in channel-first latent layout (C, H, W)."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    if p.suffix.lower() == ".png":
        return np.moveaxis(load_png(p), 2, 0)
    arr = read_pfm(p, channels=channels)
    if arr.ndim == 2:
        arr = arr[None]
    elif arr.ndim == 3 and arr.shape[2] == 3 and channels is None:
        arr = np.moveaxis(arr, 2, 0)
    return arr


def _save_image(path: str, img: np.ndarray) -> None:
    """Save image-layout data: (H, W) or (H, W, C)."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    if p.suffix.lower() == ".png":
        save_png(p, img)
    elif img.ndim == 3:
        write_pfm(p, np.moveaxis(img, 2, 0))
    else:
        write_pfm(p, img)


def _save_latent(path: str, z: np.ndarray) -> None:
    """Save channel-first latent data (C, H, W) as PFM."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    write_pfm(p, z)


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError as e:
        raise ValueError(f"size must be HxW, got {text!r}") from e


def cmd_project(args) -> int:
    cam = geometry.CameraPose(
        yaw=math.radians(args.yaw), pitch=math.radians(args.pitch),
        roll=math.radians(args.roll), hfov=math.radians(args.hfov),
        out_width=args.out_size[1], out_height=args.out_size[0])
    if args.back:
        if args.erp_size is None:
            raise ValueError("--back requires --erp-size HxW")
        persp = _load_image(args.input)
        H, W = args.erp_size
        patch, footprint = geometry.backproject_to_erp(persp, cam, W, H)
        _save_image(args.output, patch)
        if args.footprint:
            _save_image(args.footprint, footprint)
    else:
        erp = _load_image(args.input)
        if erp.ndim == 2:
            erp = erp[:, :, None]
        _save_image(args.output, geometry.project_to_perspective(erp, cam))
    return 0


def cmd_cubemap(args) -> int:
    ext = args.format
    if args.invert:
        if args.erp_size is None:
            raise ValueError("--invert requires --erp-size HxW")
        cube = {}
        for face in geometry.FACE_NAMES:
            cube[face] = _load_image(str(Path(args.in_dir) / f"{face}.{ext}"))
        H, W = args.erp_size
        _save_image(args.output, geometry.cubemap_to_erp(cube, W, H))
    else:
        erp = _load_image(args.input)
        if erp.ndim == 2:
            erp = erp[:, :, None]
        F = args.face_size or erp.shape[0]
        cube = geometry.erp_to_cubemap(erp, F)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for face, img in cube.items():
            _save_image(str(out / f"{face}.{ext}"), img)
    return 0


def cmd_noise(args) -> int:
    h, w = args.size
    field = distortion.distorted_noise(args.channels, h, w, args.seed,
                                       normalization=args.normalization)
    _save_latent(args.output, field.astype(np.float32))
    return 0


def cmd_modulate(args) -> int:
    a = _load_image(args.attention)
    if a.ndim == 3:
        a = a[:, :, 0]
    m = _load_image(args.mask)
    if m.ndim == 3:
        m = m[:, :, 0]
    amap = attention.AttentionMap.from_values(a)
    alpha = attention.attention_alpha_grid(*a.shape)
    residual = attention.modulation_residual(amap, m, alpha)
    _save_image(args.output, attention.apply_modulation(amap, residual))
    if args.residual:
        _save_image(args.residual, residual)
    return 0


def _load_mask(path: str) -> np.ndarray:
    m = _load_image(path)
    return m[:, :, 0] if m.ndim == 3 else m


def cmd_loss(args) -> int:
    pred = [_load_mask(p) for p in args.pred_mask]
    gt = [_load_mask(p) for p in args.gt_mask]
    if len(pred) != len(gt):
        raise ValueError("--pred-mask and --gt-mask must pair up")
    targets = [losses.shape_target(g, location=args.coeff_location) for g in gt]
    lines = []
    for k, (p, t) in enumerate(zip(pred, targets)):
        lines.append(f"soft_iou_{k} {losses.soft_iou(p, t.mask):.12g}")
        lines.append(f"coeff_{k} {t.coeff:.12g}")
        lines.append(f"shape_loss_{k} {losses.shape_loss_k(p, t):.12g}")
    if args.src and args.tgt:
        src = _load_image(args.src)
        tgt = _load_image(args.tgt)
        layer_objs = []
        for spec_pair in args.layer or []:
            rgb_path, alpha_path = spec_pair.split(":")
            rgb = _load_image(rgb_path)
            alpha = _load_mask(alpha_path)
            layer_objs.append(losses.ObjectLayer(rgb, alpha))
        boxes = None if args.full_frame else [geometry.bbox_of_mask(t.mask) for t in targets]
        report = losses.total_shape_loss(pred, targets, src, layer_objs, tgt, boxes)
        lines.append(f"recon_loss {report.recon:.12g}")
        lines.append(f"total_loss {report.total:.12g}")
        if args.grad_check:
            err = losses.gradient_check(pred, targets, src, layer_objs, tgt, boxes,
                                        sample=args.grad_samples, seed=args.seed)
            lines.append(f"grad_check_max_rel_err {err:.6g}")
            lines.append(f"grad_check {'pass' if err < 1e-4 else 'fail'}")
    elif args.pred_mask:
        mean = sum(losses.shape_loss_k(p, t) for p, t in zip(pred, targets)) / len(pred)
        lines.append(f"shape_loss_mean {mean:.12g}")
    print("\n".join(lines))
    return 0


def cmd_seamfix(args) -> int:
    target = _load_latent(args.input, channels=args.channels)
    cfg = seam.SeamConfig(b=args.b, s=args.s, K=args.K, T=args.T)
    denoiser = seam.EdgeBlindDenoiser(target, edge_width=args.edge_width)
    out_base = seam.run_seam_inference(denoiser, target, target, cfg, args.seed,
                                       baseline=True)
    out_fix = seam.run_seam_inference(denoiser, target, target, cfg, args.seed)
    chosen = out_base if args.baseline else out_fix
    _save_latent(args.output, chosen.astype(np.float32))
    print(f"seam_before {seam.seam_discontinuity(out_base):.12g}")
    print(f"seam_after {seam.seam_discontinuity(out_fix):.12g}")
    return 0


def cmd_schedule(args) -> int:
    sched = curriculum.MixSchedule(phase=args.phase, ramp_steps=args.ramp_steps,
                                   target_new=args.target_new)
    for step in range(args.steps):
        p = curriculum.mix_probabilities(step, sched)
        print(f"{step} " + " ".join(f"{v:.10g}" for v in p))
    return 0


def cmd_pairs(args) -> int:
    rng = curriculum.worker_rng(args.seed)
    src_paths = sorted(Path(args.src_dir).glob("*.png")) + sorted(Path(args.src_dir).glob("*.pfm"))
    ref_paths = sorted(Path(args.refs_dir).glob("*.png"))
    if not src_paths:
        raise FileNotFoundError(f"no panoramas found in {args.src_dir}")
    if not ref_paths:
        raise FileNotFoundError(f"no references found in {args.refs_dir}")
    refs = []
    for p in ref_paths:
        img = load_png(p)
        if img.shape[2] != 4:
            raise ValueError(f"reference {p} must be RGBA")
        refs.append(pairs.ReferenceObject(img, p.stem))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    types = args.types.split(",")
    triplets = []
    idx = 0
    for i in range(args.count):
        src_path = src_paths[int(rng.integers(len(src_paths)))]
        src = _load_image(str(src_path))
        if src.ndim == 2:
            src = np.repeat(src[:, :, None], 3, axis=2)
        src = src[:, :, :3]
        H, W = src.shape[:2]
        ref = refs[int(rng.integers(len(refs)))]
        etype = types[int(rng.integers(len(types)))]
        box = pairs.sample_bbox(rng, W, H)
        try:
            if etype == "addition":
                pair = pairs.make_addition(src, box, ref)
            elif etype == "removal":
                pair = pairs.make_removal(src, box, ref)
            elif etype == "replacement":
                others = [r for r in refs if r.identifier != ref.identifier]
                if not others:
                    continue  # single distinct reference available
                other = others[int(rng.integers(len(others)))]
                pair = pairs.make_replacement(src, box, ref, other)
            elif etype == "movement":
                box2 = pairs.sample_bbox(rng, W, H)
                pair = pairs.make_movement(src, box, box2, ref)
            elif etype == "modification":
                variant = pairs.ReferenceObject(
                    np.concatenate([np.clip(ref.image[:, :, :3] * 0.5, 0, 1),
                                    ref.image[:, :, 3:]], axis=2),
                    ref.identifier + "-variant")
                pair = pairs.make_modification(src, box, ref, variant)
            else:
                raise ValueError(f"unknown edit type {etype!r}")
        except pairs.PoleBBoxError:
            continue
        sp = out_dir / f"{idx:05d}_src.png"
        tp = out_dir / f"{idx:05d}_tgt.png"
        save_png(sp, pair.src_img)
        save_png(tp, pair.tgt_img)
        triplets.append(pair.to_triplet(sp.name, tp.name))
        idx += 1
    pairs.write_manifest(triplets, args.manifest)
    print(f"wrote {len(triplets)} triplets", file=sys.stderr)
    return 0


def cmd_layout(args) -> int:
    h, w = args.size
    rng = np.random.Generator(np.random.Philox(args.seed))
    if args.stage == 1:
        z_t = rng.standard_normal((args.channels, h, w))
        z_0 = rng.standard_normal((args.channels, h, w))
        m = np.ones((1, h, w)) if args.full_mask else (rng.random((1, h, w)) > 0.5).astype(float)
        bundles = [tokens.build_stage1_input(z_t, z_0, m)]
    else:
        K = args.num_layers
        z_t = rng.standard_normal((args.channels, h, w))
        z_src = rng.standard_normal((args.channels, h, w))
        layers = [rng.standard_normal((args.channels, h, w)) for _ in range(K)]
        refs = [rng.standard_normal((args.channels, h, w)) for _ in range(K)]
        masks = [(rng.random((1, h, w)) > 0.5).astype(float) for _ in range(K)]
        bundles = tokens.build_stage2_inputs(z_t, z_src, layers, refs, masks)
    for b in bundles:
        for line in b.manifest_lines():
            print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="panokit",
                                description="geometry toolkit for ERP panorama editing pipelines")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("project", help="ERP <-> perspective projection")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--yaw", type=float, default=0.0, help="degrees")
    sp.add_argument("--pitch", type=float, default=0.0, help="degrees")
    sp.add_argument("--roll", type=float, default=0.0, help="degrees")
    sp.add_argument("--hfov", type=float, default=90.0, help="degrees")
    sp.add_argument("--out-size", type=_parse_size, default=(256, 256), metavar="HxW")
    sp.add_argument("--back", action="store_true", help="perspective -> ERP instead")
    sp.add_argument("--erp-size", type=_parse_size, default=None, metavar="HxW")
    sp.add_argument("--footprint", default=None, help="where to write the footprint mask")
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("cubemap", help="ERP <-> cube map")
    sp.add_argument("--input", help="ERP image (forward mode)")
    sp.add_argument("--out-dir", help="face output directory (forward mode)")
    sp.add_argument("--face-size", type=int, default=None)
    sp.add_argument("--invert", action="store_true", help="cube -> ERP instead")
    sp.add_argument("--in-dir", help="face input directory (invert mode)")
    sp.add_argument("--output", help="ERP output (invert mode)")
    sp.add_argument("--erp-size", type=_parse_size, default=None, metavar="HxW")
    sp.add_argument("--format", choices=("png", "pfm"), default="png")
    sp.set_defaults(func=cmd_cubemap)

    sp = sub.add_parser("noise", help="latitude-distorted Gaussian noise")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--size", type=_parse_size, required=True, metavar="HxW")
    sp.add_argument("--channels", type=int, default=1)
    sp.add_argument("--normalization", choices=("global", "per-row"), default="global")
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=cmd_noise)

    sp = sub.add_parser("modulate", help="distortion-aware attention modulation")
    sp.add_argument("--attention", required=True)
    sp.add_argument("--mask", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--residual", default=None)
    sp.set_defaults(func=cmd_modulate)

    sp = sub.add_parser("loss", help="layered shape/reconstruction losses")
    sp.add_argument("--pred-mask", action="append", default=[], required=True)
    sp.add_argument("--gt-mask", action="append", default=[], required=True)
    sp.add_argument("--coeff-location", choices=("centroid", "bbox-center"),
                    default="centroid")
    sp.add_argument("--src", default=None)
    sp.add_argument("--tgt", default=None)
    sp.add_argument("--layer", action="append", default=[],
                    metavar="RGB.pfm:ALPHA.pfm")
    sp.add_argument("--full-frame", action="store_true")
    sp.add_argument("--grad-check", action="store_true")
    sp.add_argument("--grad-samples", type=int, default=16)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_loss)

    sp = sub.add_parser("seamfix", help="boundary-consistent inference demo")
    sp.add_argument("--input", required=True, help="target image/latent")
    sp.add_argument("--output", required=True)
    sp.add_argument("--channels", type=int, default=None)
    sp.add_argument("--b", type=int, default=8)
    sp.add_argument("--s", type=int, default=4)
    sp.add_argument("--K", type=int, default=3)
    sp.add_argument("--T", type=int, default=16)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--edge-width", type=int, default=2)
    sp.add_argument("--baseline", action="store_true",
                    help="write the no-extension/no-roll run's output")
    sp.set_defaults(func=cmd_seamfix)

    sp = sub.add_parser("schedule", help="curriculum mixing probabilities")
    sp.add_argument("--phase", choices=(curriculum.STAGE2_RAMP, curriculum.STAGE3_STEADY),
                    default=curriculum.STAGE2_RAMP)
    sp.add_argument("--ramp-steps", type=int, default=1000)
    sp.add_argument("--target-new", type=float, default=0.8)
    sp.add_argument("--steps", type=int, required=True)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("pairs", help="synthetic edit-pair construction")
    sp.add_argument("--src-dir", required=True)
    sp.add_argument("--refs-dir", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=8)
    sp.add_argument("--types", default="addition,removal,replacement,movement,modification")
    sp.set_defaults(func=cmd_pairs)

    sp = sub.add_parser("layout", help="conditioning bundle manifest dump")
    sp.add_argument("--stage", type=int, choices=(1, 2), default=1)
    sp.add_argument("--channels", type=int, default=4)
    sp.add_argument("--size", type=_parse_size, default=(8, 16), metavar="HxW")
    sp.add_argument("--num-layers", type=int, default=2)
    sp.add_argument("--full-mask", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_layout)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
