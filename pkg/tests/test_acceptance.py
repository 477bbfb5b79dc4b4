"""Acceptance suite: one test per criterion, one printed pass/fail line.

Every tolerance is pinned here exactly as stated; seeds are fixed so
each criterion is deterministic.  Run `pytest -s tests/test_acceptance.py -v`
to see the per-criterion lines.
"""

import math
import time
import warnings

import numpy as np

from conftest import make_chart
from panokit import attention, curriculum, distortion, losses, pairs, seam, tokens
from panokit import geometry


def check(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def test_projection_roundtrips():
    t0 = time.monotonic()
    failures = []

    rng = np.random.default_rng(1)
    lon = rng.uniform(-np.pi, np.pi, 100_000)
    lat = rng.uniform(-np.pi / 2, np.pi / 2, 100_000)
    col, row = geometry.direction_to_erp(lon, lat, 512, 256)
    lon2, lat2 = geometry.erp_to_direction(col, row, 512, 256)
    err = max(np.abs(np.angle(np.exp(1j * (lon2 - lon)))).max(),
              np.abs(lat2 - lat).max())
    if err >= 1e-9:
        failures.append(f"direction roundtrip err {err:.3g}")

    img = make_chart(256, 512)
    cam = geometry.CameraPose(yaw=0.4, pitch=0.15, hfov=math.radians(75),
                              out_width=256, out_height=256)
    persp = geometry.project_to_perspective(img, cam)
    patch, fp = geometry.backproject_to_erp(persp, cam, 512, 256)
    p1 = geometry.psnr(patch, img, mask=fp)
    if p1 <= 35.0:
        failures.append(f"perspective roundtrip PSNR {p1:.2f} dB")

    cube = geometry.erp_to_cubemap(img, 256)
    back = geometry.cubemap_to_erp(cube, 512, 256)
    p2 = geometry.psnr(back, img)
    if p2 <= 35.0:
        failures.append(f"cubemap roundtrip PSNR {p2:.2f} dB")

    elapsed = time.monotonic() - t0
    if elapsed >= 10.0:
        failures.append(f"runtime {elapsed:.1f}s")
    check("projection round-trips (<1e-9 rad; PSNR >35 dB; <10 s)",
          not failures, "; ".join(failures) or
          f"err {err:.2g}, persp {p1:.1f} dB, cube {p2:.1f} dB, {elapsed:.1f}s")


def test_latitude_profile():
    H = 64
    failures = []
    if distortion.alpha_at(H / 2, H) != 0.0:
        failures.append("alpha(H/2) != 0")
    if distortion.alpha_at(0, H) != 1.0 or distortion.alpha_at(H, H) != 1.0:
        failures.append("alpha(poles) != 1")
    ys = np.linspace(0, H, 4097)
    total = distortion.alpha_at(ys, H) + distortion.scale_factor(ys, H)
    if np.abs(total - 1.0).max() > 4 * np.finfo(float).eps:
        failures.append("alpha + D != 1")
    want = 1.0 - math.cos(math.pi / 4)
    got = distortion.alpha_at(H / 4, H)
    if abs(got - want) > 1e-12:
        failures.append(f"alpha(H/4) = {got!r}")
    check("latitude profile (exact pins; alpha+D=1; alpha(H/4) within 1e-12)",
          not failures, "; ".join(failures))


def test_distorted_noise():
    t0 = time.monotonic()
    C, H, W = 2, 64, 128
    failures = []
    for seed in range(100):
        base = distortion.base_noise(C, H, W, seed)
        stretched = distortion.stretch_rows(base)
        if not np.array_equal(stretched[:, H // 2, :], base[:, H // 2, :]):
            failures.append(f"seed {seed}: equator row differs from base")
            break
        pole = stretched[:, 0, :]
        if not np.all(pole == pole[:, :1]):
            failures.append(f"seed {seed}: pole row not constant")
            break
        out = distortion.distorted_noise(C, H, W, seed)
        mu = out.mean(axis=(1, 2))
        var = out.var(axis=(1, 2))
        if np.abs(mu).max() >= 0.02 or np.abs(var - 1.0).max() >= 0.05:
            failures.append(f"seed {seed}: post-norm stats out of bounds")
            break
    a = distortion.distorted_noise(3, H, W, seed=1234)
    b = distortion.distorted_noise(3, H, W, seed=1234)
    if not np.array_equal(a, b):
        failures.append("not bitwise deterministic")
    elapsed = time.monotonic() - t0
    if elapsed >= 30.0:
        failures.append(f"100-seed suite took {elapsed:.1f}s")
    check("distorted noise (pole const; equator = base; stats; bitwise; <30 s)",
          not failures, "; ".join(failures) or f"{elapsed:.1f}s")


def test_attention_modulation():
    rng = np.random.default_rng(2)
    shape = (6, 12)
    bound = monotone = fixed = 0
    for _ in range(10_000):
        v = rng.random(shape)
        amap = attention.AttentionMap(v, float(v.min()), float(v.max()))
        mask = (rng.random(shape) > 0.5).astype(float)
        alpha = rng.random(shape)
        out = attention.modulate(amap, mask, alpha)
        if out.min() < amap.a_min - 1e-12 or out.max() > amap.a_max + 1e-12:
            bound += 1
        half = attention.modulate(amap, mask, alpha * 0.5)
        inside = mask == 1.0
        if np.any(out[inside] < half[inside] - 1e-12) or \
           np.any(out[~inside] > half[~inside] + 1e-12):
            monotone += 1
        at_bounds = np.where(inside, amap.a_max, amap.a_min)
        fmap = attention.AttentionMap(at_bounds, amap.a_min, amap.a_max)
        if np.any(attention.modulation_residual(fmap, mask, alpha) != 0.0):
            fixed += 1
    check("attention modulation (bound/monotonicity/fixed-point, 1e4 instances)",
          bound == 0 and monotone == 0 and fixed == 0,
          f"violations: bound {bound}, monotone {monotone}, fixed {fixed}")


def test_losses():
    failures = []
    masks = np.array([[(i >> k) & 1 for k in range(9)] for i in range(512)],
                     dtype=float).reshape(512, 3, 3)
    inter = np.minimum(masks[:, None], masks[None, :]).sum(axis=(2, 3))
    union = np.maximum(masks[:, None], masks[None, :]).sum(axis=(2, 3))
    soft = np.where(union == 0, 1.0, inter / (union + losses.IOU_EPS))
    exact = np.where(union == 0, 1.0, inter / np.maximum(union, 1))
    if np.abs(soft - exact).max() >= 1e-7:
        failures.append("soft IoU != set IoU on 3x3 masks")
    spot = np.random.default_rng(3).integers(0, 512, (64, 2))
    for i, j in spot:
        if abs(losses.soft_iou(masks[i], masks[j]) - exact[i, j]) >= 1e-7:
            failures.append("soft_iou() disagrees with vectorized sweep")
            break

    rng = np.random.default_rng(4)
    h, w, K = 8, 16, 2
    pred, targets, layers = [], [], []
    for _ in range(K):
        p = rng.uniform(0.05, 0.95, (h, w))
        g = rng.uniform(0.05, 0.95, (h, w))
        ties = np.abs(p - g) < 1e-3
        p[ties] += 2e-3
        pred.append(p)
        targets.append(losses.ShapeTarget(g, float(rng.uniform(0.2, 0.9))))
        layers.append(losses.ObjectLayer(rng.uniform(0.1, 0.9, (h, w, 3)),
                                         rng.uniform(0.1, 0.9, (h, w))))
    src = rng.uniform(0.1, 0.9, (h, w, 3))
    tgt = rng.uniform(0.1, 0.9, (h, w, 3))
    boxes = [geometry.BBox(3, 1, 12, 6)]
    rel = losses.gradient_check(pred, targets, src, layers, tgt, boxes, step=1e-4)
    if rel >= 1e-4:
        failures.append(f"gradient max rel err {rel:.3g}")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        disjoint = []
        for i, ly in enumerate(layers):
            alpha = np.zeros_like(ly.alpha)
            alpha[:, 6 * i:6 * i + 5] = 1.0
            disjoint.append(losses.ObjectLayer(ly.rgb * alpha[:, :, None], alpha))
        a = losses.total_shape_loss(pred, targets, src, disjoint, tgt, boxes)
        b = losses.total_shape_loss(pred[::-1], targets[::-1], src, disjoint[::-1],
                                    tgt, boxes)
    if a.total != b.total:
        failures.append("permutation invariance not exact")
    check("losses (exhaustive 3x3 IoU; FD gradients <1e-4; permutation exact)",
          not failures, "; ".join(failures) or f"grad rel err {rel:.2g}")


def test_boundary_consistent_inference():
    C, h, w = 2, 8, 64
    x = np.arange(w)
    y = np.arange(h)
    target = np.stack([
        0.5 + 0.4 * np.sin(2 * np.pi * x / w)[None, :] * np.cos(np.pi * y / h)[:, None],
        0.5 + 0.3 * np.cos(4 * np.pi * x / w)[None, :] * np.ones((h, 1)),
    ])
    cfg = seam.SeamConfig(b=8, s=5, K=3, T=16)
    den = seam.EdgeBlindDenoiser(target, edge_width=2)
    wins = 0
    for seed in range(100):
        base = seam.run_seam_inference(den, target, target, cfg, seed, baseline=True)
        fixed = seam.run_seam_inference(den, target, target, cfg, seed)
        if seam.seam_discontinuity(fixed) <= seam.seam_discontinuity(base):
            wins += 1

    marked = target.copy()
    marked[:, :, 37] += 2.0
    den2 = seam.EdgeBlindDenoiser(marked, edge_width=2)
    out = seam.run_seam_inference(den2, marked, marked, cfg, seed=3)
    po = out.mean(axis=(0, 1))
    pt = marked.mean(axis=(0, 1))
    po = po - po.mean()
    pt = pt - pt.mean()
    lag = int(np.argmax([float(po @ np.roll(pt, k)) for k in range(w)]))

    rng = np.random.default_rng(5)
    z = rng.standard_normal((C, h, w))
    ident = all(
        np.array_equal(seam.crop_boundary(seam.extend_boundary(z, b), b), z)
        for b in (1, 5, 16, w - 1))

    check("boundary-consistent inference (>=95/100 improve; lag 0; crop/extend bitwise)",
          wins >= 95 and lag == 0 and ident,
          f"wins {wins}/100, xcorr lag {lag}, identity {ident}")


def test_curriculum():
    failures = []
    ramp = curriculum.MixSchedule(ramp_steps=100)
    if not np.array_equal(curriculum.mix_probabilities(0, ramp), [1.0, 0.0]):
        failures.append("step 0 != (1.0, 0.0)")
    end = curriculum.mix_probabilities(100, ramp)
    if abs(end[0] - 0.2) > 1e-15 or abs(end[1] - 0.8) > 1e-15:
        failures.append(f"ramp end {end} != (0.2, 0.8)")
    steady = curriculum.mix_probabilities(0, curriculum.MixSchedule(
        phase=curriculum.STAGE3_STEADY))
    if not np.array_equal(steady, [0.2, 0.2, 0.6]):
        failures.append(f"stage-3 mix {steady} != (0.2, 0.2, 0.6)")

    log = curriculum.log_draws(100_000, ramp, seed=9, fixed_step=50)
    p = curriculum.mix_probabilities(50, ramp)
    for stage, want in enumerate(p, start=1):
        got = log.counts.get(stage, 0) / log.total
        if abs(got - want) >= 0.01:
            failures.append(f"stage {stage} frequency {got:.4f} vs {want}")
    check("curriculum (exact appendix ratios; draws within 1% over 1e5)",
          not failures, "; ".join(failures))


def test_pair_builder():
    H, W = 64, 128
    src = make_chart(H, W)
    ref_img = np.zeros((24, 24, 4))
    ref_img[:, :, 0] = 0.8
    ref_img[:, :, 2] = 0.3
    ref_img[3:21, 3:21, 3] = 1.0
    ref = pairs.ReferenceObject(ref_img, "crate")
    box = pairs.sample_bbox(np.random.default_rng(6), W, H)

    failures = []
    add = pairs.make_addition(src, box, ref)
    rem = pairs.make_removal(src, box, ref)
    if not (np.array_equal(rem.src_img, add.tgt_img)
            and np.array_equal(rem.tgt_img, add.src_img)):
        failures.append("removal/addition duality not bitwise")

    union = np.zeros((H, W), dtype=bool)
    for fp in add.footprints:
        union |= fp > 0
    if not np.array_equal(add.src_img[~union], add.tgt_img[~union]):
        failures.append("background not bitwise preserved")

    widths = []
    for center_row in (32, 20, 12):  # |lat| 0, 33.75, 56.25 deg
        b = geometry.BBox(33, center_row - 4, 47, center_row + 4)
        _, fp, _ = pairs.place_object(src, b, ref)
        widths.append(geometry.bbox_of_mask(fp).width(W))
    if not (widths[0] < widths[1] < widths[2]):
        failures.append(f"footprint widths not monotone in |lat|: {widths}")
    check("pair builder (duality bitwise; background bitwise; width monotone in |lat|)",
          not failures, "; ".join(failures) or f"widths {widths}")


def test_token_layout():
    rng = np.random.default_rng(7)
    C, h, w = 4, 8, 16
    failures = []
    bundle = tokens.build_stage1_input(
        rng.standard_normal((C, h, w)), rng.standard_normal((C, h, w)),
        np.ones((1, h, w)))
    if np.any(bundle.block("z_con") != 0.0):
        failures.append("T2P degeneracy not exact")

    worst_norm = 0.0
    for _ in range(2000):
        v = rng.standard_normal(16)
        pos = tuple(rng.integers(0, 64, 3))
        r = tokens.rope3d_apply(v, pos)
        worst_norm = max(worst_norm, abs(float(np.linalg.norm(r) - np.linalg.norm(v))))
    if worst_norm >= 1e-9:
        failures.append(f"rope norm drift {worst_norm:.3g}")

    worst_rel = 0.0
    for _ in range(200):
        q = rng.standard_normal(24)
        k = rng.standard_normal(24)
        p1 = rng.integers(0, 20, 3)
        p2 = rng.integers(0, 20, 3)
        d = rng.integers(-10, 10, 3)
        a = tokens.rope3d_apply(q, tuple(p1)) @ tokens.rope3d_apply(k, tuple(p2))
        b = tokens.rope3d_apply(q, tuple(p1 + d)) @ tokens.rope3d_apply(k, tuple(p2 + d))
        worst_rel = max(worst_rel, abs(a - b))
    if worst_rel >= 1e-6:
        failures.append(f"relative-shift deviation {worst_rel:.3g}")
    check("token layout (T2P exact; rope norm <1e-9; relative shift <1e-6)",
          not failures, "; ".join(failures) or
          f"norm {worst_norm:.2g}, shift {worst_rel:.2g}")
