/**
 * Thin bindings over the panokit core for ML-pipeline consumers.
 *
 * Exposed functions mirror the core batch operations 1:1 and execute
 * them through the core CLI, exchanging contiguous float32 arrays via
 * PFM files — zero behavioral divergence by construction.  Inputs are
 * validated (dtype, shape) before anything is spawned; violations
 * raise DtypeError/ShapeError naming expected vs. got.
 *
 * Array layout: masks/grayscale [H, W]; color images and latents
 * channel-first [C, H, W].  No callbacks into JS occur while the core
 * runs; each call is one synchronous subprocess.
 */

import * as path from "node:path";

import { ArrayView, DtypeError, ShapeError, checkView, view } from "./arrayview.js";
import { CoreError, coreVersion, parseReport, runCore, withScratch } from "./core.js";
import { readPfm, writePfm } from "./pfm.js";

export { ArrayView, DtypeError, ShapeError, view } from "./arrayview.js";
export { CoreError, coreCommand, coreVersion, runCore } from "./core.js";
export { encodePfm, decodePfm, readPfm, writePfm } from "./pfm.js";

/** Must match the core's `panokit --version`; verified by the tests. */
export const VERSION = "0.1.0";

const RAD2DEG = 180 / Math.PI;

/** Gnomonic camera, radians, mirroring the core's CameraPose fields. */
export interface CameraPose {
  yaw: number;
  pitch: number;
  roll?: number;
  hfov: number;
  outWidth: number;
  outHeight: number;
}

function cameraFlags(cam: CameraPose): string[] {
  if (!(cam.hfov > 0 && cam.hfov < Math.PI)) {
    throw new RangeError(`hfov must lie strictly inside (0, pi), got ${cam.hfov}`);
  }
  return [
    "--yaw", String(cam.yaw * RAD2DEG),
    "--pitch", String(cam.pitch * RAD2DEG),
    "--roll", String((cam.roll ?? 0) * RAD2DEG),
    "--hfov", String(cam.hfov * RAD2DEG),
  ];
}

function checkImage(v: ArrayView, name: string): void {
  checkView(v, undefined, name);
  if (v.shape.length === 3) {
    checkView(v, [3, null, null], name);
  } else if (v.shape.length !== 2) {
    throw new ShapeError(`${name}: expected [H, W] or [3, H, W], got [${v.shape}]`);
  }
}

/** Render a gnomonic perspective view of an ERP panorama. */
export function projectToPerspective(erp: ArrayView, cam: CameraPose): ArrayView {
  checkImage(erp, "erp");
  const [h, w] = erp.shape.slice(-2);
  if (w !== 2 * h) throw new ShapeError(`erp: expected W = 2H, got [${erp.shape}]`);
  return withScratch((dir) => {
    const inp = path.join(dir, "erp.pfm");
    const out = path.join(dir, "persp.pfm");
    writePfm(inp, erp);
    runCore(["project", "--input", inp, "--output", out,
             ...cameraFlags(cam),
             "--out-size", `${cam.outHeight}x${cam.outWidth}`]);
    return readPfm(out);
  });
}

/** Back-project a perspective image into ERP space: patch + footprint. */
export function backprojectToErp(
  persp: ArrayView,
  cam: CameraPose,
  erpHeight: number,
  erpWidth: number,
): { patch: ArrayView; footprint: ArrayView } {
  checkImage(persp, "persp");
  if (erpWidth !== 2 * erpHeight) {
    throw new ShapeError(`erp size: expected W = 2H, got ${erpHeight}x${erpWidth}`);
  }
  return withScratch((dir) => {
    const inp = path.join(dir, "persp.pfm");
    const patchPath = path.join(dir, "patch.pfm");
    const fpPath = path.join(dir, "fp.pfm");
    writePfm(inp, persp);
    runCore(["project", "--back", "--input", inp, "--output", patchPath,
             "--footprint", fpPath, ...cameraFlags(cam),
             "--erp-size", `${erpHeight}x${erpWidth}`]);
    return { patch: readPfm(patchPath), footprint: readPfm(fpPath) };
  });
}

/** Latitude-stretched Gaussian noise, channel-first [C, H, W]. */
export function distortedNoise(
  channels: number,
  height: number,
  width: number,
  seed: number,
  normalization: "global" | "per-row" = "global",
): ArrayView {
  if (width !== 2 * height) {
    throw new ShapeError(`noise size: expected W = 2H, got ${height}x${width}`);
  }
  return withScratch((dir) => {
    const out = path.join(dir, "noise.pfm");
    runCore(["noise", "--seed", String(seed), "--size", `${height}x${width}`,
             "--channels", String(channels), "--normalization", normalization,
             "--output", out]);
    return readPfm(out, channels);
  });
}

function checkMaskPair(a: ArrayView, b: ArrayView): void {
  checkView(a, [null, null], "mask a");
  checkView(b, [a.shape[0], a.shape[1]], "mask b");
}

/** Soft IoU (sum-min over sum-max) of two same-shape [H, W] masks. */
export function softIou(a: ArrayView, b: ArrayView): number {
  checkMaskPair(a, b);
  return withScratch((dir) => {
    const pa = path.join(dir, "a.pfm");
    const pb = path.join(dir, "b.pfm");
    writePfm(pa, a);
    writePfm(pb, b);
    const report = parseReport(runCore(["loss", "--pred-mask", pa, "--gt-mask", pb]));
    return Number(report.get("soft_iou_0"));
  });
}

export interface ObjectLayer {
  rgb: ArrayView;   // [3, H, W]
  alpha: ArrayView; // [H, W]
}

export interface TotalShapeLossArgs {
  predMasks: ArrayView[];
  gtMasks: ArrayView[];
  src?: ArrayView; // [3, H, W]
  tgt?: ArrayView; // [3, H, W]
  layers?: ObjectLayer[];
  fullFrame?: boolean;
  coeffLocation?: "centroid" | "bbox-center";
}

export interface ShapeLossReport {
  softIous: number[];
  coeffs: number[];
  shapeLosses: number[];
  recon?: number;
  total?: number;
}

/** Aggregate layered shape loss; recon/total require src, tgt. */
export function totalShapeLoss(args: TotalShapeLossArgs): ShapeLossReport {
  const K = args.predMasks.length;
  if (K === 0 || args.gtMasks.length !== K) {
    throw new ShapeError(
      `need matching mask lists, got ${K} pred vs ${args.gtMasks.length} gt`);
  }
  args.predMasks.forEach((m, i) => checkView(m, [null, null], `pred mask ${i}`));
  args.gtMasks.forEach((m, i) =>
    checkView(m, [args.predMasks[i].shape[0], args.predMasks[i].shape[1]], `gt mask ${i}`));
  if (args.src) checkView(args.src, [3, null, null], "src");
  if (args.tgt) checkView(args.tgt, [3, null, null], "tgt");
  (args.layers ?? []).forEach((l, i) => {
    checkView(l.rgb, [3, null, null], `layer ${i} rgb`);
    checkView(l.alpha, [l.rgb.shape[1], l.rgb.shape[2]], `layer ${i} alpha`);
  });
  return withScratch((dir) => {
    const flags: string[] = ["loss"];
    args.predMasks.forEach((m, i) => {
      const p = path.join(dir, `pred${i}.pfm`);
      writePfm(p, m);
      flags.push("--pred-mask", p);
    });
    args.gtMasks.forEach((m, i) => {
      const p = path.join(dir, `gt${i}.pfm`);
      writePfm(p, m);
      flags.push("--gt-mask", p);
    });
    if (args.coeffLocation) flags.push("--coeff-location", args.coeffLocation);
    if (args.src && args.tgt) {
      const ps = path.join(dir, "src.pfm");
      const pt = path.join(dir, "tgt.pfm");
      writePfm(ps, args.src);
      writePfm(pt, args.tgt);
      flags.push("--src", ps, "--tgt", pt);
      (args.layers ?? []).forEach((l, i) => {
        const pr = path.join(dir, `layer${i}_rgb.pfm`);
        const pA = path.join(dir, `layer${i}_alpha.pfm`);
        writePfm(pr, l.rgb);
        writePfm(pA, l.alpha);
        flags.push("--layer", `${pr}:${pA}`);
      });
      if (args.fullFrame) flags.push("--full-frame");
    }
    const report = parseReport(runCore(flags));
    const out: ShapeLossReport = { softIous: [], coeffs: [], shapeLosses: [] };
    for (let i = 0; i < K; i++) {
      out.softIous.push(Number(report.get(`soft_iou_${i}`)));
      out.coeffs.push(Number(report.get(`coeff_${i}`)));
      out.shapeLosses.push(Number(report.get(`shape_loss_${i}`)));
    }
    if (report.has("recon_loss")) out.recon = Number(report.get("recon_loss"));
    if (report.has("total_loss")) out.total = Number(report.get("total_loss"));
    return out;
  });
}

export interface SeamConfig {
  b: number;
  s: number;
  K: number;
  T: number;
}

export interface SeamResult {
  output: ArrayView;
  seamBefore: number;
  seamAfter: number;
}

/**
 * Boundary-consistent denoising of a [C, H, W] target latent with the
 * core's built-in edge-blind toy denoiser.  Returns the strategy
 * output (or the plain baseline's with `baseline: true`) plus the
 * paired seam metrics.  The core loop runs without callbacks into JS.
 */
export function runSeamInference(
  target: ArrayView,
  cfg: SeamConfig,
  seed: number,
  opts: { edgeWidth?: number; baseline?: boolean } = {},
): SeamResult {
  checkView(target, [null, null, null], "target");
  return withScratch((dir) => {
    const inp = path.join(dir, "target.pfm");
    const out = path.join(dir, "out.pfm");
    writePfm(inp, target);
    const flags = ["seamfix", "--input", inp, "--output", out,
                   "--channels", String(target.shape[0]),
                   "--b", String(cfg.b), "--s", String(cfg.s),
                   "--K", String(cfg.K), "--T", String(cfg.T),
                   "--seed", String(seed)];
    if (opts.edgeWidth !== undefined) flags.push("--edge-width", String(opts.edgeWidth));
    if (opts.baseline) flags.push("--baseline");
    const report = parseReport(runCore(flags));
    return {
      output: readPfm(out, target.shape[0]),
      seamBefore: Number(report.get("seam_before")),
      seamAfter: Number(report.get("seam_after")),
    };
  });
}

/** True when the binding and the installed core agree on the version. */
export function versionsMatch(): boolean {
  return coreVersion() === VERSION;
}
