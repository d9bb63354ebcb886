// SPRIGVEC binary vector file: 8-byte magic, u32 version, u32 dim, u64 count
// (little-endian), then count*dim float32 rows. Ids live in a sidecar text
// file, one per line, same order. Vectors are written raw (unnormalized);
// normalization is the loader's job.

import { promises as fs } from "node:fs";

export const MAGIC = "SPRIGVEC";
export const VERSION = 1;
export const HEADER_BYTES = 8 + 4 + 4 + 8;

export function encodeHeader(dim: number, count: number): Buffer {
  const buf = Buffer.alloc(HEADER_BYTES);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 8);
  buf.writeUInt32LE(dim, 12);
  buf.writeBigUInt64LE(BigInt(count), 16);
  return buf;
}

export function encodeRow(row: number[] | Float32Array): Buffer {
  const arr = row instanceof Float32Array ? row : Float32Array.from(row);
  return Buffer.from(arr.buffer, arr.byteOffset, arr.byteLength);
}

export interface SprigvecFile {
  dim: number;
  count: number;
  vectors: Float32Array; // row-major, count*dim
}

export async function readSprigvec(path: string): Promise<SprigvecFile> {
  const data = await fs.readFile(path);
  if (data.subarray(0, 8).toString("ascii") !== MAGIC) {
    throw new Error(`${path}: bad magic`);
  }
  const version = data.readUInt32LE(8);
  if (version !== VERSION) {
    throw new Error(`${path}: unsupported version ${version}`);
  }
  const dim = data.readUInt32LE(12);
  const count = Number(data.readBigUInt64LE(16));
  const payload = data.subarray(HEADER_BYTES);
  if (payload.length !== count * dim * 4) {
    throw new Error(
      `${path}: payload ${payload.length} bytes, header implies ${count * dim * 4}`
    );
  }
  const vectors = new Float32Array(
    payload.buffer,
    payload.byteOffset,
    count * dim
  ).slice();
  return { dim, count, vectors };
}

export async function readIds(path: string): Promise<string[]> {
  const text = await fs.readFile(path, "utf-8");
  return text.split("\n").filter((line) => line.length > 0);
}
