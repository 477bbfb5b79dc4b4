/**
 * Contiguous row-major float32 array views exchanged with the core.
 *
 * Images and masks are [H, W], color images and latents are
 * channel-first [C, H, W] — identical to the core's PFM conventions.
 */

export interface ArrayView {
  /** Contiguous row-major payload; must be a Float32Array. */
  data: Float32Array;
  /** Dimensions, outermost first. */
  shape: number[];
}

export class DtypeError extends TypeError {}

export class ShapeError extends RangeError {}

export function view(data: Float32Array, shape: number[]): ArrayView {
  const v = { data, shape };
  checkView(v, undefined, "array");
  return v;
}

export function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

/**
 * Validate dtype, buffer length, and (optionally) an expected shape.
 * `null` entries in `expect` are wildcards.
 */
export function checkView(
  v: ArrayView,
  expect?: (number | null)[],
  name = "array",
): void {
  if (!(v.data instanceof Float32Array)) {
    const got = (v.data as object)?.constructor?.name ?? typeof v.data;
    throw new DtypeError(`${name}: expected Float32Array, got ${got}`);
  }
  if (v.shape.length === 0 || v.shape.some((d) => !Number.isInteger(d) || d < 1)) {
    throw new ShapeError(`${name}: invalid shape [${v.shape}]`);
  }
  const n = elementCount(v.shape);
  if (n !== v.data.length) {
    throw new ShapeError(
      `${name}: shape [${v.shape}] implies ${n} elements, buffer has ${v.data.length}`,
    );
  }
  if (expect) {
    const ok =
      v.shape.length === expect.length &&
      expect.every((d, i) => d === null || v.shape[i] === d);
    if (!ok) {
      throw new ShapeError(
        `${name}: expected shape [${expect.map((d) => d ?? "*")}], got [${v.shape}]`,
      );
    }
  }
}
