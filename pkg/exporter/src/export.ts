/**
 * The export job: for each (image, box) pair, extract the patch, run the
 * requested taps, and write one TFS1 file named
 * `<frame>__<x>_<y>_<w>_<h>.tfs`.
 */

import * as fs from 'fs';
import * as path from 'path';

import { Box, extractPatch, imagenetNormalize, standardize } from './patch';
import { readPng } from './png';
import { FeatureStack, StackLayer, encodeStack } from './tfs';
import { TAP_NAMES, WeightSource, computeTaps } from './vgg';

export interface ExportJob {
  /** (image path, box) pairs, one output file each */
  items: Array<{ image: string; box: Box }>;
  patchSize: number;
  padding: number;
  /** tap names from {input, conv1_1..conv5_1} */
  layers: string[];
  outDir: string;
  weights: WeightSource;
}

export interface ExportOutcome {
  written: string[];
  failures: Array<{ image: string; error: string }>;
}

export function validateLayers(layers: string[]): void {
  for (const layer of layers) {
    if (layer !== 'input' && !TAP_NAMES.includes(layer)) {
      throw new Error(
        `unknown layer ${layer}; know input, ${TAP_NAMES.join(', ')}`,
      );
    }
  }
  if (layers.length === 0) {
    throw new Error('need at least one layer');
  }
}

function formatCoord(v: number): string {
  const rounded = Math.round(v * 100) / 100;
  return Number.isInteger(rounded) ? String(rounded) : String(rounded);
}

export function stackFileName(image: string, box: Box): string {
  const stem = path.basename(image).replace(/\.[^.]+$/, '');
  return (
    `${stem}__${formatCoord(box.x)}_${formatCoord(box.y)}_` +
    `${formatCoord(box.w)}_${formatCoord(box.h)}.tfs`
  );
}

export function buildStack(
  img: { width: number; height: number; data: Float32Array },
  box: Box,
  job: Pick<ExportJob, 'patchSize' | 'padding' | 'layers' | 'weights'>,
): FeatureStack {
  const patch = extractPatch(img, box, job.padding, job.patchSize);
  const layers: StackLayer[] = [];
  if (job.layers.includes('input')) {
    layers.push({
      layerId: 0,
      name: 'input',
      width: job.patchSize,
      height: job.patchSize,
      channels: 3,
      stride: 1,
      data: standardize(patch, job.patchSize),
    });
  }
  const taps = job.layers.filter((l) => l !== 'input');
  if (taps.length > 0) {
    const normalized = imagenetNormalize(patch);
    for (const tap of computeTaps(normalized, job.patchSize, taps, job.weights)) {
      layers.push({
        layerId: 1 + TAP_NAMES.indexOf(tap.name),
        name: `${tap.name}@imagenet`,
        width: tap.width,
        height: tap.height,
        channels: tap.channels,
        stride: tap.stride,
        data: tap.data,
      });
    }
  }
  return { patchSize: job.patchSize, layers };
}

export function exportFeatures(job: ExportJob): ExportOutcome {
  validateLayers(job.layers);
  fs.mkdirSync(job.outDir, { recursive: true });
  const written: string[] = [];
  const failures: Array<{ image: string; error: string }> = [];
  for (const item of job.items) {
    try {
      const img = readPng(item.image);
      const stack = buildStack(img, item.box, job);
      const outPath = path.join(job.outDir, stackFileName(item.image, item.box));
      fs.writeFileSync(outPath, encodeStack(stack));
      written.push(outPath);
    } catch (err) {
      failures.push({ image: item.image, error: String(err) });
    }
  }
  return { written, failures };
}

/**
 * Parse a boxes CSV. Five-field lines are `frame,x,y,w,h` (0-based, the
 * engine's output format); four-field lines are `x,y,w,h` in the 1-based
 * ground-truth convention and are shifted to 0-based.
 */
export function parseBoxesCsv(text: string): Box[] {
  const boxes: Box[] = [];
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  for (let i = 0; i < lines.length; i++) {
    const parts = lines[i].split(/[,\t]/).map((p) => p.trim()).filter(Boolean);
    if (parts.length === 5) {
      const [, x, y, w, h] = parts.map(Number);
      boxes.push({ x, y, w, h });
    } else if (parts.length === 4) {
      const [x, y, w, h] = parts.map(Number);
      boxes.push({ x: x - 1, y: y - 1, w, h });
    } else {
      throw new Error(`boxes line ${i + 1}: expected 4 or 5 fields, got ${parts.length}`);
    }
    const last = boxes[boxes.length - 1];
    if (![last.x, last.y, last.w, last.h].every(Number.isFinite)) {
      throw new Error(`boxes line ${i + 1}: non-numeric value`);
    }
  }
  return boxes;
}
