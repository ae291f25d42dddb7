/**
 * VGG19 convolutional front end with post-ReLU taps at the first conv of
 * each block: conv1_1, conv2_1, conv3_1, conv4_1, conv5_1. Only the prefix
 * needed for the deepest requested tap is executed.
 *
 * Weights come from either a tfjs LayersModel directory (Keras VGG19
 * converted with the tfjs converter; layers named block{i}_conv{j}) or a
 * deterministic synthetic generator ("synthetic:<seed>") for hermetic runs.
 */

import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

/** conv channel plan; 'P' is a 2x2 max-pool */
const PLAN: Array<{ name: string; out: number } | 'P'> = [
  { name: 'conv1_1', out: 64 },
  { name: 'conv1_2', out: 64 },
  'P',
  { name: 'conv2_1', out: 128 },
  { name: 'conv2_2', out: 128 },
  'P',
  { name: 'conv3_1', out: 256 },
  { name: 'conv3_2', out: 256 },
  { name: 'conv3_3', out: 256 },
  { name: 'conv3_4', out: 256 },
  'P',
  { name: 'conv4_1', out: 512 },
  { name: 'conv4_2', out: 512 },
  { name: 'conv4_3', out: 512 },
  { name: 'conv4_4', out: 512 },
  'P',
  { name: 'conv5_1', out: 512 },
];

export const TAP_NAMES = ['conv1_1', 'conv2_1', 'conv3_1', 'conv4_1', 'conv5_1'];

/** stride of each tap relative to the input patch */
export function tapStride(tap: string): number {
  const block = Number(tap[4]);
  return 2 ** (block - 1);
}

export interface ConvWeights {
  kernel: tf.Tensor4D; // [kh, kw, inC, outC]
  bias: tf.Tensor1D;
}

export type WeightSource = (name: string, inC: number, outC: number) => ConvWeights;

export class SetupError extends Error {}

/** mulberry32 PRNG + Box-Muller; deterministic across runs and platforms */
function gaussianStream(seed: number): () => number {
  let state = seed >>> 0;
  const next = () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
  let spare: number | null = null;
  return () => {
    if (spare !== null) {
      const v = spare;
      spare = null;
      return v;
    }
    let u = 0;
    let v = 0;
    while (u === 0) u = next();
    v = next();
    const mag = Math.sqrt(-2.0 * Math.log(u));
    spare = mag * Math.sin(2.0 * Math.PI * v);
    return mag * Math.cos(2.0 * Math.PI * v);
  };
}

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

/** He-scaled Gaussian kernels, seeded per layer name */
export function syntheticWeights(seed: number): WeightSource {
  return (name, inC, outC) => {
    const gen = gaussianStream((seed ^ fnv1a(name)) >>> 0);
    const scale = Math.sqrt(2.0 / (3 * 3 * inC));
    const kernel = new Float32Array(3 * 3 * inC * outC);
    for (let i = 0; i < kernel.length; i++) kernel[i] = gen() * scale;
    return {
      kernel: tf.tensor4d(kernel, [3, 3, inC, outC]),
      bias: tf.zeros([outC]),
    };
  };
}

/** Load kernels from a tfjs LayersModel directory (model.json + shards). */
export function fileWeights(modelDir: string): WeightSource {
  const manifestPath = path.join(modelDir, 'model.json');
  if (!fs.existsSync(manifestPath)) {
    throw new SetupError(
      `no model.json under ${modelDir}; download Keras VGG19 (ImageNet) and ` +
        `convert it with: tensorflowjs_converter --input_format keras ` +
        `vgg19.h5 ${modelDir}`,
    );
  }
  const manifest = JSON.parse(fs.readFileSync(manifestPath, 'utf-8'));
  const groups = manifest.weightsManifest;
  const specs: tf.io.WeightsManifestEntry[] = [];
  const buffers: Buffer[] = [];
  for (const group of groups) {
    specs.push(...group.weights);
    for (const shard of group.paths) {
      buffers.push(fs.readFileSync(path.join(modelDir, shard)));
    }
  }
  const blob = Buffer.concat(buffers);
  const weightMap = tf.io.decodeWeights(
    blob.buffer.slice(blob.byteOffset, blob.byteOffset + blob.byteLength),
    specs,
  );
  return (name, inC, outC) => {
    // conv{i}_{j} <-> Keras block{i}_conv{j}
    const block = name[4];
    const idx = name[6];
    const kerasName = `block${block}_conv${idx}`;
    const kernelKey = Object.keys(weightMap).find(
      (k) => k.includes(kerasName) && k.includes('kernel'),
    );
    const biasKey = Object.keys(weightMap).find(
      (k) => k.includes(kerasName) && k.includes('bias'),
    );
    if (!kernelKey || !biasKey) {
      throw new SetupError(`model is missing weights for ${kerasName}`);
    }
    const kernel = weightMap[kernelKey] as tf.Tensor4D;
    if (kernel.shape[2] !== inC || kernel.shape[3] !== outC) {
      throw new SetupError(
        `${kerasName} kernel shape ${kernel.shape} does not match ` +
          `expected [3,3,${inC},${outC}]`,
      );
    }
    return { kernel, bias: weightMap[biasKey] as tf.Tensor1D };
  };
}

export function parseWeightSpec(spec: string): WeightSource {
  if (spec.startsWith('synthetic:')) {
    const seed = Number(spec.slice('synthetic:'.length));
    if (!Number.isFinite(seed)) {
      throw new SetupError(`bad synthetic weight seed in ${spec}`);
    }
    return syntheticWeights(seed >>> 0);
  }
  return fileWeights(spec);
}

export interface TapResult {
  name: string;
  width: number;
  height: number;
  channels: number;
  stride: number;
  data: Float32Array;
}

/**
 * Run the VGG19 front end on an ImageNet-normalized patch (row-major
 * (y, x, k) Float32Array) and return the post-ReLU activations of the
 * requested taps.
 */
export function computeTaps(
  normalized: Float32Array,
  size: number,
  taps: string[],
  weights: WeightSource,
): TapResult[] {
  for (const tap of taps) {
    if (!TAP_NAMES.includes(tap)) {
      throw new Error(`unknown tap ${tap}; know ${TAP_NAMES.join(', ')}`);
    }
  }
  const deepest = Math.max(...taps.map((t) => TAP_NAMES.indexOf(t)));
  const results: TapResult[] = [];
  tf.tidy(() => {
    let x = tf.tensor4d(normalized, [1, size, size, 3]);
    let inC = 3;
    let reached = -1;
    for (const stage of PLAN) {
      if (stage === 'P') {
        x = tf.maxPool(x as tf.Tensor4D, 2, 2, 'same');
        continue;
      }
      const { kernel, bias } = weights(stage.name, inC, stage.out);
      x = tf.relu(tf.add(tf.conv2d(x as tf.Tensor4D, kernel, 1, 'same'), bias));
      inC = stage.out;
      const tapIndex = TAP_NAMES.indexOf(stage.name);
      if (tapIndex >= 0) {
        if (taps.includes(stage.name)) {
          const shape = x.shape as [number, number, number, number];
          results.push({
            name: stage.name,
            height: shape[1],
            width: shape[2],
            channels: shape[3],
            stride: tapStride(stage.name),
            data: new Float32Array(x.dataSync()),
          });
        }
        reached = tapIndex;
        if (reached >= deepest) break;
      }
    }
  });
  return results.sort((a, b) => TAP_NAMES.indexOf(a.name) - TAP_NAMES.indexOf(b.name));
}
