/**
 * Patch geometry shared with the tracking engine: crop a box expanded by a
 * padding ratio, resample bilinearly to a square patch, replicate edges for
 * out-of-image samples. Output sample centers use the half-pixel
 * convention (pixel i spans [i, i+1)), matching the engine's extractor.
 */

export interface RgbImage {
  width: number;
  height: number;
  /** row-major (y, x, k), 3 channels, values in [0, 1] */
  data: Float32Array;
}

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export function extractPatch(
  img: RgbImage,
  box: Box,
  padding: number,
  outSize: number,
): Float32Array {
  if (box.w <= 0 || box.h <= 0) {
    throw new Error(`box must have positive area: ${JSON.stringify(box)}`);
  }
  const cx = box.x + box.w / 2;
  const cy = box.y + box.h / 2;
  const rw = box.w * (1 + padding);
  const rh = box.h * (1 + padding);
  const out = new Float32Array(outSize * outSize * 3);
  const clamp = (v: number, lo: number, hi: number) =>
    v < lo ? lo : v > hi ? hi : v;

  for (let j = 0; j < outSize; j++) {
    const sy = cy - rh / 2 + (j + 0.5) * (rh / outSize) - 0.5;
    const ry = clamp(sy, 0, img.height - 1);
    const r0 = clamp(Math.floor(sy), 0, img.height - 1);
    const r1 = clamp(r0 + 1, 0, img.height - 1);
    const fr = clamp(ry - r0, 0, 1);
    for (let i = 0; i < outSize; i++) {
      const sx = cx - rw / 2 + (i + 0.5) * (rw / outSize) - 0.5;
      const rx = clamp(sx, 0, img.width - 1);
      const c0 = clamp(Math.floor(sx), 0, img.width - 1);
      const c1 = clamp(c0 + 1, 0, img.width - 1);
      const fc = clamp(rx - c0, 0, 1);
      for (let k = 0; k < 3; k++) {
        const v00 = img.data[(r0 * img.width + c0) * 3 + k];
        const v01 = img.data[(r0 * img.width + c1) * 3 + k];
        const v10 = img.data[(r1 * img.width + c0) * 3 + k];
        const v11 = img.data[(r1 * img.width + c1) * 3 + k];
        const top = v00 * (1 - fc) + v01 * fc;
        const bot = v10 * (1 - fc) + v11 * fc;
        out[(j * outSize + i) * 3 + k] = top * (1 - fr) + bot * fr;
      }
    }
  }
  return out;
}

/**
 * Per-channel zero-mean unit-variance standardization (population std);
 * flat channels map to zeros. Mirrors the engine's raw input layer.
 */
export function standardize(patch: Float32Array, size: number): Float32Array {
  const out = new Float32Array(patch.length);
  const n = size * size;
  for (let k = 0; k < 3; k++) {
    let sum = 0;
    for (let p = 0; p < n; p++) sum += patch[p * 3 + k];
    const mean = sum / n;
    let varSum = 0;
    for (let p = 0; p < n; p++) {
      const d = patch[p * 3 + k] - mean;
      varSum += d * d;
    }
    const std = Math.sqrt(varSum / n);
    if (std < 1e-12) continue; // zeros already
    for (let p = 0; p < n; p++) {
      out[p * 3 + k] = (patch[p * 3 + k] - mean) / std;
    }
  }
  return out;
}

const IMAGENET_MEAN = [0.485, 0.456, 0.406];
const IMAGENET_STD = [0.229, 0.224, 0.225];

/** Standard ImageNet mean/std normalization on [0, 1] RGB. */
export function imagenetNormalize(patch: Float32Array): Float32Array {
  const out = new Float32Array(patch.length);
  for (let p = 0; p < patch.length; p += 3) {
    for (let k = 0; k < 3; k++) {
      out[p + k] = (patch[p + k] - IMAGENET_MEAN[k]) / IMAGENET_STD[k];
    }
  }
  return out;
}
