// Embedding model registry. The default "grid-v1" model is a fully local,
// deterministic pixel-statistics embedder: coarse grid color moments pushed
// through a seeded random projection. It needs no downloaded weights, so
// exports are reproducible bit-for-bit anywhere. The CLIP names from the
// engine's model registry are accepted but require locally available
// checkpoints, which this environment does not ship.

import type { DecodedImage } from "./image.js";
import { ModelLoadError } from "./errors.js";

export interface Embedder {
  readonly name: string;
  readonly dimension: number;
  embedBatch(images: DecodedImage[]): Float32Array[];
}

const GRID = 8; // cells per side
const CHANNELS = 3; // luminance + two opponent-color channels
const DIM = 64;
const SEED = 0x5ce9e5;

// Deterministic 32-bit PRNG (mulberry32); identical across runs/platforms.
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gridFeatures(img: DecodedImage): Float64Array {
  // Per grid cell: mean luminance, mean red-green and blue-yellow opponents.
  // A trailing bias feature keeps the vector away from exact zero for flat
  // black frames.
  const feats = new Float64Array(GRID * GRID * CHANNELS + 1);
  const counts = new Float64Array(GRID * GRID);
  const { width, height, data } = img;
  for (let y = 0; y < height; y++) {
    const cy = Math.min(GRID - 1, Math.floor((y * GRID) / height));
    for (let x = 0; x < width; x++) {
      const cx = Math.min(GRID - 1, Math.floor((x * GRID) / width));
      const cell = cy * GRID + cx;
      const o = (y * width + x) * 4;
      const r = data[o] / 255;
      const g = data[o + 1] / 255;
      const b = data[o + 2] / 255;
      const base = cell * CHANNELS;
      feats[base] += 0.299 * r + 0.587 * g + 0.114 * b;
      feats[base + 1] += r - g;
      feats[base + 2] += b - (r + g) / 2;
      counts[cell] += 1;
    }
  }
  for (let cell = 0; cell < GRID * GRID; cell++) {
    const n = counts[cell];
    if (n > 0) {
      const base = cell * CHANNELS;
      feats[base] /= n;
      feats[base + 1] /= n;
      feats[base + 2] /= n;
    }
  }
  feats[feats.length - 1] = 1.0;
  return feats;
}

class GridEmbedder implements Embedder {
  readonly name = "grid-v1";
  readonly dimension = DIM;
  private readonly projection: Float64Array; // DIM x featureCount, row-major

  constructor() {
    const featureCount = GRID * GRID * CHANNELS + 1;
    const rand = mulberry32(SEED);
    this.projection = new Float64Array(DIM * featureCount);
    for (let i = 0; i < this.projection.length; i++) {
      this.projection[i] = rand() * 2 - 1;
    }
  }

  embedBatch(images: DecodedImage[]): Float32Array[] {
    return images.map((img) => {
      const feats = gridFeatures(img);
      const out = new Float64Array(DIM);
      for (let i = 0; i < DIM; i++) {
        let acc = 0;
        const row = i * feats.length;
        for (let j = 0; j < feats.length; j++) {
          acc += this.projection[row + j] * feats[j];
        }
        out[i] = acc;
      }
      let norm = 0;
      for (const v of out) norm += v * v;
      norm = Math.sqrt(norm);
      const unit = new Float32Array(DIM);
      for (let i = 0; i < DIM; i++) {
        unit[i] = out[i] / norm;
      }
      return unit;
    });
  }
}

const CLIP_NAMES = new Set(["ViT-B/32", "ViT-B/16", "ViT-L/14", "RN50", "RN101"]);

export function loadModel(name: string): Embedder {
  if (name === "grid-v1") {
    return new GridEmbedder();
  }
  const key = name.startsWith("CLIP ") ? name.slice(5).trim() : name;
  if (CLIP_NAMES.has(key)) {
    throw new ModelLoadError(
      `model ${JSON.stringify(name)} needs locally available checkpoint weights, ` +
        `which are not installed; use grid-v1 or provide weights offline`,
    );
  }
  throw new ModelLoadError(
    `unknown model ${JSON.stringify(name)}; known: grid-v1, ` +
      [...CLIP_NAMES].sort().join(", "),
  );
}
