// Consumer stub for the engine's image/text pair manifests
// (CSV: image_path,text,frame_id). Fine-tuning itself happens elsewhere;
// this is the ingestion side of that interface.

import { readFileSync } from "fs";
import Papa from "papaparse";

import { InvalidJobError } from "./errors.js";

export interface PairEntry {
  imagePath: string;
  text: string;
  frameId: string;
}

export function loadPairManifest(path: string): PairEntry[] {
  const parsed = Papa.parse<Record<string, string>>(readFileSync(path, "utf-8"), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new InvalidJobError(`${path}: ${parsed.errors[0].message}`);
  }
  const fields = parsed.meta.fields ?? [];
  if (fields.join(",") !== "image_path,text,frame_id") {
    throw new InvalidJobError(
      `${path}: expected header image_path,text,frame_id, got ${fields.join(",")}`,
    );
  }
  return parsed.data.map((row, i) => {
    if (!row.image_path || !row.frame_id || row.text === undefined) {
      throw new InvalidJobError(`${path}: row ${i + 2} has empty cells`);
    }
    return { imagePath: row.image_path, text: row.text, frameId: row.frame_id };
  });
}
