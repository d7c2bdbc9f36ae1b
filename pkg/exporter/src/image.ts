import { readFileSync } from "fs";
import jpeg from "jpeg-js";
import { PNG } from "pngjs";

import { ImageDecodeError } from "./errors.js";

export interface DecodedImage {
  width: number;
  height: number;
  data: Uint8Array; // RGBA, row-major
}

const PNG_MAGIC = Buffer.from([0x89, 0x50, 0x4e, 0x47]);

export function decodeImage(path: string): DecodedImage {
  const buf = readFileSync(path);
  try {
    if (buf.subarray(0, 4).equals(PNG_MAGIC)) {
      const png = PNG.sync.read(buf);
      return { width: png.width, height: png.height, data: new Uint8Array(png.data) };
    }
    if (buf.length >= 2 && buf[0] === 0xff && buf[1] === 0xd8) {
      const img = jpeg.decode(buf, { useTArray: true });
      return { width: img.width, height: img.height, data: img.data };
    }
  } catch (err) {
    throw new ImageDecodeError(`${path}: ${(err as Error).message}`);
  }
  throw new ImageDecodeError(`${path}: not a PNG or JPEG file`);
}
