import * as fs from 'fs';
import { PNG } from 'pngjs';

import { RgbImage } from './patch';

export function readPng(path: string): RgbImage {
  const png = PNG.sync.read(fs.readFileSync(path));
  const data = new Float32Array(png.width * png.height * 3);
  for (let p = 0; p < png.width * png.height; p++) {
    data[p * 3] = png.data[p * 4] / 255;
    data[p * 3 + 1] = png.data[p * 4 + 1] / 255;
    data[p * 3 + 2] = png.data[p * 4 + 2] / 255;
  }
  return { width: png.width, height: png.height, data };
}
