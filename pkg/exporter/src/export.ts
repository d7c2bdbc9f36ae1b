import { readdirSync, renameSync, writeFileSync } from "fs";
import { basename, extname, join } from "path";

import { encodeEmb1, type EmbeddingRecord } from "./emb1.js";
import { decodeImage } from "./image.js";
import { loadModel } from "./model.js";
import { InvalidJobError } from "./errors.js";

export interface ExportJob {
  model: string;
  imageDir: string;
  outPath: string;
  batchSize: number;
}

export interface ExportSummary {
  model: string;
  dimension: number;
  count: number;
  outPath: string;
  metaPath: string;
}

const IMAGE_EXTENSIONS = new Set([".png", ".jpg", ".jpeg"]);

export function listImages(dir: string): string[] {
  const names = readdirSync(dir).filter((n) =>
    IMAGE_EXTENSIONS.has(extname(n).toLowerCase()),
  );
  names.sort();
  return names;
}

export function runExport(job: ExportJob): ExportSummary {
  if (!Number.isInteger(job.batchSize) || job.batchSize < 1) {
    throw new InvalidJobError(`batch size must be >= 1, got ${job.batchSize}`);
  }
  const embedder = loadModel(job.model);
  const names = listImages(job.imageDir);
  if (names.length === 0) {
    throw new InvalidJobError(`no .png/.jpg images in ${job.imageDir}`);
  }

  const records: EmbeddingRecord[] = [];
  for (let start = 0; start < names.length; start += job.batchSize) {
    const batch = names.slice(start, start + job.batchSize);
    const images = batch.map((n) => decodeImage(join(job.imageDir, n)));
    const vectors = embedder.embedBatch(images);
    for (let i = 0; i < batch.length; i++) {
      records.push({
        frameId: basename(batch[i], extname(batch[i])),
        vector: vectors[i],
      });
    }
  }

  // One atomic publish: a crashed run can never leave a half-written file.
  const payload = encodeEmb1(embedder.dimension, records);
  const tmp = `${job.outPath}.tmp-${process.pid}`;
  writeFileSync(tmp, payload);
  renameSync(tmp, job.outPath);

  const metaPath = `${job.outPath}.meta.json`;
  const meta = {
    model: embedder.name,
    dimension: embedder.dimension,
    count: records.length,
    source: job.imageDir,
  };
  writeFileSync(metaPath, JSON.stringify(meta, null, 2) + "\n");

  return {
    model: embedder.name,
    dimension: embedder.dimension,
    count: records.length,
    outPath: job.outPath,
    metaPath,
  };
}
