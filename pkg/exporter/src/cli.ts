#!/usr/bin/env node
/**
 * export-features --images <list|dir> --boxes <csv> --layers <comma list>
 *                 --patch 128 --out <dir> [--padding 1.0]
 *                 [--weights <model-dir>|synthetic:<seed>]
 *
 * Writes one TFS1 file per (image, box) pair into --out.
 * Exit codes: 0 success (possibly with per-item failures reported on
 * stderr), 1 runtime/setup failure, 2 bad usage.
 */

import * as fs from 'fs';
import * as path from 'path';

import { Box } from './patch';
import { exportFeatures, parseBoxesCsv, validateLayers } from './export';
import { SetupError, parseWeightSpec } from './vgg';

interface Args {
  images: string;
  boxes?: string;
  layers: string[];
  patch: number;
  out: string;
  padding: number;
  weights: string;
}

const USAGE =
  'usage: export-features --images <list|dir> [--boxes <csv>] ' +
  '--layers input,conv1_1,... --patch 128 --out <dir> ' +
  '[--padding 1.0] [--weights <model-dir>|synthetic:<seed>]';

function parseArgs(argv: string[]): Args {
  const out: Partial<Args> & { layers?: string[] } = {
    patch: 128,
    padding: 1.0,
    weights: 'synthetic:0',
    layers: ['input', 'conv1_1', 'conv2_1'],
  };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    const need = () => {
      if (value === undefined) usageError(`missing value for ${flag}`);
      i++;
      return value as string;
    };
    switch (flag) {
      case '--images':
        out.images = need();
        break;
      case '--boxes':
        out.boxes = need();
        break;
      case '--layers':
        out.layers = need().split(',').map((s) => s.trim()).filter(Boolean);
        break;
      case '--patch':
        out.patch = Number(need());
        break;
      case '--padding':
        out.padding = Number(need());
        break;
      case '--out':
        out.out = need();
        break;
      case '--weights':
        out.weights = need();
        break;
      case '--help':
      case '-h':
        console.log(USAGE);
        process.exit(0);
        break;
      default:
        usageError(`unknown flag ${flag}`);
    }
  }
  if (!out.images) usageError('--images is required');
  if (!out.out) usageError('--out is required');
  if (!Number.isInteger(out.patch) || (out.patch as number) < 8) {
    usageError('--patch must be an integer >= 8');
  }
  if (!Number.isFinite(out.padding) || (out.padding as number) < 0) {
    usageError('--padding must be >= 0');
  }
  return out as Args;
}

function usageError(message: string): never {
  console.error(`error: ${message}\n${USAGE}`);
  process.exit(2);
}

function listImages(spec: string): string[] {
  if (fs.existsSync(spec) && fs.statSync(spec).isDirectory()) {
    return fs
      .readdirSync(spec)
      .filter((f) => f.toLowerCase().endsWith('.png'))
      .sort()
      .map((f) => path.join(spec, f));
  }
  return spec.split(',').map((s) => s.trim()).filter(Boolean);
}

function main(): number {
  const args = parseArgs(process.argv.slice(2));
  try {
    validateLayers(args.layers);
  } catch (err) {
    usageError(String(err instanceof Error ? err.message : err));
  }

  const images = listImages(args.images);
  if (images.length === 0) {
    usageError(`no images found under ${args.images}`);
  }
  let boxes: Box[];
  if (args.boxes) {
    boxes = parseBoxesCsv(fs.readFileSync(args.boxes, 'utf-8'));
    if (boxes.length !== images.length) {
      usageError(`${images.length} images but ${boxes.length} boxes`);
    }
  } else {
    usageError('--boxes is required (one box per image)');
  }

  let weights;
  try {
    weights = parseWeightSpec(args.weights);
  } catch (err) {
    if (err instanceof SetupError) {
      console.error(`setup error: ${err.message}`);
      return 1;
    }
    throw err;
  }

  const outcome = exportFeatures({
    items: images.map((image, i) => ({ image, box: boxes[i] })),
    patchSize: args.patch,
    padding: args.padding,
    layers: args.layers,
    outDir: args.out,
    weights,
  });
  for (const failure of outcome.failures) {
    console.error(`failed: ${failure.image}: ${failure.error}`);
  }
  console.log(`wrote ${outcome.written.length} stacks to ${args.out}`);
  if (outcome.written.length === 0) {
    return 1;
  }
  return 0;
}

process.exit(main());
