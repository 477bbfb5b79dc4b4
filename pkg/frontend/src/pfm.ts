/**
 * PFM (Portable FloatMap) encoding matching the core's conventions:
 * little-endian payload (negative scale), rows bottom-to-top,
 * channel-first in memory.  [H, W] and [1, H, W] map to `Pf`,
 * [3, H, W] to `PF` (interleaved on disk), any other [C, H, W] to a
 * `Pf` file with channels stacked vertically (a C*H x W map).
 */

import * as fs from "node:fs";

import { ArrayView, ShapeError, view } from "./arrayview.js";

export function encodePfm(v: ArrayView): Buffer {
  let rows: number;
  let cols: number;
  let color = false;
  let payload: Float32Array;
  if (v.shape.length === 2) {
    [rows, cols] = v.shape;
    payload = v.data;
  } else if (v.shape.length === 3) {
    const [c, h, w] = v.shape;
    cols = w;
    if (c === 3) {
      color = true;
      rows = h;
      payload = new Float32Array(v.data.length);
      // channel-first -> interleaved
      for (let ch = 0; ch < 3; ch++) {
        for (let i = 0; i < h * w; i++) {
          payload[i * 3 + ch] = v.data[ch * h * w + i];
        }
      }
    } else {
      rows = c * h; // vertical channel stacking (c == 1 included)
      payload = v.data;
    }
  } else {
    throw new ShapeError(`unsupported PFM shape [${v.shape}]`);
  }
  const header = Buffer.from(`${color ? "PF" : "Pf"}\n${cols} ${rows}\n-1.0\n`, "ascii");
  const ch = color ? 3 : 1;
  const body = Buffer.alloc(rows * cols * ch * 4);
  // bottom-to-top row order
  for (let r = 0; r < rows; r++) {
    const src = payload.subarray((rows - 1 - r) * cols * ch, (rows - r) * cols * ch);
    Buffer.from(src.buffer, src.byteOffset, src.length * 4).copy(body, r * cols * ch * 4);
  }
  return Buffer.concat([header, body]);
}

export function writePfm(path: string, v: ArrayView): void {
  fs.writeFileSync(path, encodePfm(v));
}

export function decodePfm(buf: Buffer, channels?: number): ArrayView {
  let off = 0;
  const line = (): string => {
    const nl = buf.indexOf(0x0a, off);
    if (nl < 0) throw new Error("truncated PFM header");
    const s = buf.subarray(off, nl).toString("ascii").trim();
    off = nl + 1;
    return s;
  };
  const magic = line();
  if (magic !== "PF" && magic !== "Pf") {
    throw new Error(`not a PFM file: magic ${JSON.stringify(magic)}`);
  }
  const color = magic === "PF";
  const [w, h] = line().split(/\s+/).map(Number);
  const scale = Number(line());
  const count = w * h * (color ? 3 : 1);
  if (buf.length - off < count * 4) throw new Error("truncated PFM payload");
  const le = scale < 0;
  const flat = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    flat[i] = le ? buf.readFloatLE(off + i * 4) : buf.readFloatBE(off + i * 4);
  }
  const ch = color ? 3 : 1;
  // undo bottom-to-top
  const ordered = new Float32Array(count);
  for (let r = 0; r < h; r++) {
    ordered.set(flat.subarray((h - 1 - r) * w * ch, (h - r) * w * ch), r * w * ch);
  }
  if (color) {
    if (channels !== undefined && channels !== 3) {
      throw new ShapeError(`PF file holds 3 channels, asked for ${channels}`);
    }
    const out = new Float32Array(count);
    for (let c = 0; c < 3; c++) {
      for (let i = 0; i < h * w; i++) {
        out[c * h * w + i] = ordered[i * 3 + c];
      }
    }
    return view(out, [3, h, w]);
  }
  if (channels === undefined) return view(ordered, [h, w]);
  if (h % channels !== 0) {
    throw new ShapeError(`stacked height ${h} not divisible by channels=${channels}`);
  }
  return view(ordered, [channels, h / channels, w]);
}

export function readPfm(path: string, channels?: number): ArrayView {
  return decodePfm(fs.readFileSync(path), channels);
}
