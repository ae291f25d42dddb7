import { describe, expect, it } from 'vitest';

import { extractPatch, imagenetNormalize, standardize, RgbImage } from '../src/patch';

function gray(width: number, height: number, value: number): RgbImage {
  const data = new Float32Array(width * height * 3).fill(value);
  return { width, height, data };
}

describe('extractPatch', () => {
  it('reproduces the shared checkerboard bilinear fixture', () => {
    // same hand-derived case the tracking engine uses: 2x2 checkerboard to
    // 4x4, half-pixel sample centers with edge clamping
    const img: RgbImage = {
      width: 2,
      height: 2,
      data: new Float32Array([
        1, 1, 1, 0, 0, 0,
        0, 0, 0, 1, 1, 1,
      ]),
    };
    const patch = extractPatch(img, { x: 0, y: 0, w: 2, h: 2 }, 0.0, 4);
    const expected = [
      [1.0, 0.75, 0.25, 0.0],
      [0.75, 0.625, 0.375, 0.25],
      [0.25, 0.375, 0.625, 0.75],
      [0.0, 0.25, 0.75, 1.0],
    ];
    for (let r = 0; r < 4; r++) {
      for (let c = 0; c < 4; c++) {
        expect(patch[(r * 4 + c) * 3]).toBeCloseTo(expected[r][c], 10);
      }
    }
  });

  it('identity crop copies the image', () => {
    const img: RgbImage = {
      width: 3,
      height: 3,
      data: new Float32Array(27).map((_, i) => (i % 7) / 7),
    };
    const patch = extractPatch(img, { x: 0, y: 0, w: 3, h: 3 }, 0.0, 3);
    expect(Array.from(patch)).toEqual(Array.from(img.data));
  });

  it('replicates edges for out-of-image boxes', () => {
    const img = gray(6, 6, 0.4);
    const patch = extractPatch(img, { x: 100, y: 100, w: 4, h: 4 }, 1.0, 8);
    for (const v of patch) expect(v).toBeCloseTo(0.4, 6);
  });

  it('rejects degenerate boxes', () => {
    expect(() => extractPatch(gray(4, 4, 0), { x: 0, y: 0, w: 0, h: 2 }, 0, 4)).toThrow();
  });
});

describe('normalization', () => {
  it('standardize maps flat channels to zeros', () => {
    const out = standardize(new Float32Array(16 * 16 * 3).fill(0.5), 16);
    for (const v of out) expect(v).toBe(0);
  });

  it('standardize yields zero mean unit variance', () => {
    const size = 8;
    const patch = new Float32Array(size * size * 3).map(() => Math.random());
    const out = standardize(patch, size);
    for (let k = 0; k < 3; k++) {
      let sum = 0;
      let sq = 0;
      for (let p = 0; p < size * size; p++) {
        sum += out[p * 3 + k];
      }
      const mean = sum / (size * size);
      for (let p = 0; p < size * size; p++) {
        const d = out[p * 3 + k] - mean;
        sq += d * d;
      }
      expect(mean).toBeCloseTo(0, 6);
      expect(sq / (size * size)).toBeCloseTo(1, 5);
    }
  });

  it('imagenet normalization centers the channel means', () => {
    const patch = new Float32Array([0.485, 0.456, 0.406]);
    const out = imagenetNormalize(patch);
    expect(out[0]).toBeCloseTo(0, 6);
    expect(out[1]).toBeCloseTo(0, 6);
    expect(out[2]).toBeCloseTo(0, 6);
  });
});
