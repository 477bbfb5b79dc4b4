/**
 * Bitwise parity: every shipped fixture is reproduced through the
 * binding layer and compared byte for byte against the core's output.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";

import {
  backprojectToErp,
  distortedNoise,
  projectToPerspective,
  runSeamInference,
  softIou,
  totalShapeLoss,
} from "../src/index.js";
import { encodePfm, readPfm } from "../src/pfm.js";
import { ArrayView } from "../src/arrayview.js";

const FIX = path.join(__dirname, "..", "fixtures");

const DEG = Math.PI / 180;

function fixtureBytes(name: string): Buffer {
  return fs.readFileSync(path.join(FIX, name));
}

function expectBitwise(got: ArrayView, goldenName: string, channels?: number) {
  const golden = readPfm(path.join(FIX, goldenName), channels);
  expect(got.shape).toEqual(golden.shape);
  expect(Buffer.from(got.data.buffer, got.data.byteOffset, got.data.byteLength)
    .equals(Buffer.from(golden.data.buffer, golden.data.byteOffset,
                        golden.data.byteLength))).toBe(true);
}

describe("distorted noise parity", () => {
  it("reproduces noise_seed7_64x128.pfm bitwise", () => {
    const got = distortedNoise(1, 64, 128, 7);
    expect(got.shape).toEqual([1, 64, 128]);
    // byte-level comparison against the shipped core output
    expect(encodePfm({ data: got.data, shape: [64, 128] })
      .equals(fixtureBytes("noise_seed7_64x128.pfm"))).toBe(true);
  });

  it("is deterministic across calls", () => {
    const a = distortedNoise(2, 32, 64, 11);
    const b = distortedNoise(2, 32, 64, 11);
    expect(Buffer.from(a.data.buffer).equals(Buffer.from(b.data.buffer))).toBe(true);
  });
});

describe("projection parity", () => {
  const cam = {
    yaw: 35 * DEG, pitch: 12 * DEG, hfov: 80 * DEG,
    outWidth: 96, outHeight: 96,
  };

  it("reproduces project_golden.pfm bitwise", () => {
    const erp = readPfm(path.join(FIX, "erp_chart.pfm"), 3);
    const persp = projectToPerspective(erp, cam);
    expectBitwise(persp, "project_golden.pfm", 3);
  });

  it("reproduces the backprojection patch and footprint bitwise", () => {
    const persp = readPfm(path.join(FIX, "project_golden.pfm"), 3);
    const { patch, footprint } = backprojectToErp(persp, cam, 64, 128);
    expectBitwise(patch, "backproject_patch_golden.pfm", 3);
    expectBitwise(footprint, "backproject_footprint_golden.pfm");
  });
});

describe("loss parity", () => {
  function reportValues(): Map<string, number> {
    const out = new Map<string, number>();
    for (const line of fs.readFileSync(path.join(FIX, "loss_report.txt"), "utf-8").split("\n")) {
      const [k, v] = line.trim().split(" ");
      if (k) out.set(k, Number(v));
    }
    return out;
  }

  it("softIou matches the stored CLI report exactly", () => {
    const pred = readPfm(path.join(FIX, "mask_pred.pfm"));
    const gt = readPfm(path.join(FIX, "mask_gt.pfm"));
    expect(softIou(pred, gt)).toBe(reportValues().get("soft_iou_0"));
  });

  it("totalShapeLoss reproduces every report field exactly", () => {
    const report = totalShapeLoss({
      predMasks: [readPfm(path.join(FIX, "mask_pred.pfm"))],
      gtMasks: [readPfm(path.join(FIX, "mask_gt.pfm"))],
      src: readPfm(path.join(FIX, "img_src.pfm"), 3),
      tgt: readPfm(path.join(FIX, "img_tgt.pfm"), 3),
      layers: [{
        rgb: readPfm(path.join(FIX, "layer_rgb.pfm"), 3),
        alpha: readPfm(path.join(FIX, "layer_alpha.pfm")),
      }],
    });
    const want = reportValues();
    expect(report.softIous[0]).toBe(want.get("soft_iou_0"));
    expect(report.coeffs[0]).toBe(want.get("coeff_0"));
    expect(report.shapeLosses[0]).toBe(want.get("shape_loss_0"));
    expect(report.recon).toBe(want.get("recon_loss"));
    expect(report.total).toBe(want.get("total_loss"));
  });
});

describe("seam inference parity", () => {
  it("reproduces seamfix_golden.pfm and its metrics bitwise", () => {
    const target = readPfm(path.join(FIX, "seam_target.pfm"), 2);
    const result = runSeamInference(target, { b: 8, s: 5, K: 3, T: 16 }, 0);
    expectBitwise(result.output, "seamfix_golden.pfm", 2);
    const metrics = fs.readFileSync(path.join(FIX, "seamfix_metrics.txt"), "utf-8");
    const before = Number(metrics.match(/seam_before (\S+)/)![1]);
    const after = Number(metrics.match(/seam_after (\S+)/)![1]);
    expect(result.seamBefore).toBe(before);
    expect(result.seamAfter).toBe(after);
    expect(result.seamAfter).toBeLessThan(result.seamBefore);
  });

  it("baseline flag returns the unfixed run", () => {
    const target = readPfm(path.join(FIX, "seam_target.pfm"), 2);
    const fixed = runSeamInference(target, { b: 8, s: 5, K: 3, T: 16 }, 0);
    const base = runSeamInference(target, { b: 8, s: 5, K: 3, T: 16 }, 0,
                                  { baseline: true });
    expect(base.seamBefore).toBe(fixed.seamBefore);
    expect(Buffer.from(base.output.data.buffer)
      .equals(Buffer.from(fixed.output.data.buffer))).toBe(false);
  });
});
