/**
 * TFS1 feature-stack file format (little-endian):
 *   magic "TFS1" | u32 version=1 | u32 patch_size | u32 layer_count
 *   per layer: u32 layer_id | u32 name_len | name (UTF-8)
 *              u32 width | u32 height | u32 channels | u32 stride
 *              width*height*channels f32, row-major (y, x, k)
 */

export interface StackLayer {
  layerId: number;
  name: string;
  width: number;
  height: number;
  channels: number;
  stride: number;
  /** row-major (y, x, k) activations */
  data: Float32Array;
}

export interface FeatureStack {
  patchSize: number;
  layers: StackLayer[];
}

const MAGIC = Buffer.from('TFS1', 'ascii');
const VERSION = 1;

export function encodeStack(stack: FeatureStack): Buffer {
  const parts: Buffer[] = [];
  const header = Buffer.alloc(16);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(stack.patchSize, 8);
  header.writeUInt32LE(stack.layers.length, 12);
  parts.push(header);
  for (const layer of stack.layers) {
    const expected = layer.width * layer.height * layer.channels;
    if (layer.data.length !== expected) {
      throw new Error(
        `layer ${layer.layerId} has ${layer.data.length} values, expected ${expected}`,
      );
    }
    const name = Buffer.from(layer.name, 'utf-8');
    const meta = Buffer.alloc(8 + name.length + 16);
    meta.writeUInt32LE(layer.layerId, 0);
    meta.writeUInt32LE(name.length, 4);
    name.copy(meta, 8);
    meta.writeUInt32LE(layer.width, 8 + name.length);
    meta.writeUInt32LE(layer.height, 12 + name.length);
    meta.writeUInt32LE(layer.channels, 16 + name.length);
    meta.writeUInt32LE(layer.stride, 20 + name.length);
    parts.push(meta);
    // force little-endian byte order regardless of host
    const payload = Buffer.alloc(layer.data.length * 4);
    for (let i = 0; i < layer.data.length; i++) {
      payload.writeFloatLE(layer.data[i], i * 4);
    }
    parts.push(payload);
  }
  return Buffer.concat(parts);
}

export function decodeStack(blob: Buffer): FeatureStack {
  let pos = 0;
  const take = (n: number, what: string): Buffer => {
    if (pos + n > blob.length) {
      throw new Error(`truncated file while reading ${what} at byte ${pos}`);
    }
    const out = blob.subarray(pos, pos + n);
    pos += n;
    return out;
  };
  const u32 = (what: string): number => take(4, what).readUInt32LE(0);

  if (!take(4, 'magic').equals(MAGIC)) {
    throw new Error('bad magic at byte 0');
  }
  const version = u32('version');
  if (version !== VERSION) {
    throw new Error(`unsupported version ${version}`);
  }
  const patchSize = u32('patch_size');
  const layerCount = u32('layer_count');
  const layers: StackLayer[] = [];
  for (let i = 0; i < layerCount; i++) {
    const layerId = u32(`layer ${i} id`);
    const nameLen = u32(`layer ${i} name length`);
    const name = take(nameLen, `layer ${i} name`).toString('utf-8');
    const width = u32(`layer ${i} width`);
    const height = u32(`layer ${i} height`);
    const channels = u32(`layer ${i} channels`);
    const stride = u32(`layer ${i} stride`);
    const count = width * height * channels;
    const raw = take(count * 4, `layer ${i} data`);
    const data = new Float32Array(count);
    for (let j = 0; j < count; j++) {
      data[j] = raw.readFloatLE(j * 4);
    }
    layers.push({ layerId, name, width, height, channels, stride, data });
  }
  return { patchSize, layers };
}
