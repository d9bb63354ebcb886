// Export job: encode every selected record of a generic_jsonl file in input
// order and write the SPRIGVEC file, the ids sidecar, and a metadata sidecar
// {model, dim, count}. Any failure (encoder load, dimension drift mid-batch)
// aborts and removes partial outputs.

import { promises as fs } from "node:fs";

import { Encoder, makeEncoder } from "./encoders.js";
import { readRecords, RecordKind } from "./corpus.js";
import { encodeHeader, encodeRow } from "./sprigvec.js";

export interface ExportJob {
  input: string;
  model: string;
  batchSize: number;
  outVectors: string;
  outIds: string;
  kind?: RecordKind;
  hashDim?: number;
}

export interface ExportResult {
  dim: number;
  count: number;
  model: string;
}

export function metadataPath(outVectors: string): string {
  return `${outVectors}.meta.json`;
}

async function cleanup(job: ExportJob): Promise<void> {
  for (const path of [job.outVectors, job.outIds, metadataPath(job.outVectors)]) {
    await fs.rm(path, { force: true });
  }
}

export async function exportVectors(
  job: ExportJob,
  encoder?: Encoder
): Promise<ExportResult> {
  if (job.batchSize < 1) throw new Error("batch size must be >= 1");
  const records = await readRecords(job.input, job.kind ?? "all");
  if (records.length === 0) {
    throw new Error(`${job.input}: no encodable records`);
  }
  const enc = encoder ?? (await makeEncoder(job.model, job.hashDim));

  try {
    const rowChunks: Buffer[] = [];
    let dim = -1;
    for (let start = 0; start < records.length; start += job.batchSize) {
      const batch = records.slice(start, start + job.batchSize);
      const rows = await enc.encode(batch.map((r) => r.text));
      if (rows.length !== batch.length) {
        throw new Error(
          `encoder returned ${rows.length} rows for a batch of ${batch.length}`
        );
      }
      for (const row of rows) {
        if (dim < 0) dim = row.length;
        if (row.length !== dim) {
          throw new Error(
            `dimension drift mid-batch: expected ${dim}, got ${row.length}`
          );
        }
        rowChunks.push(encodeRow(row));
      }
    }

    await fs.writeFile(
      job.outVectors,
      Buffer.concat([encodeHeader(dim, records.length), ...rowChunks])
    );
    await fs.writeFile(job.outIds, records.map((r) => r.id + "\n").join(""));
    const meta = { model: enc.name, dim, count: records.length };
    await fs.writeFile(metadataPath(job.outVectors), JSON.stringify(meta) + "\n");
    return { dim, count: records.length, model: enc.name };
  } catch (err) {
    await cleanup(job);
    throw err;
  }
}
