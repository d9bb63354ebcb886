// generic_jsonl reader: passage lines carry {id, title, text}, query lines
// {id, question, gold_ids}. The exporter encodes "title. text" for passages
// and the raw question for queries.

import { createInterface } from "node:readline";
import { createReadStream } from "node:fs";

export type RecordKind = "passages" | "queries" | "all";

export interface EncodableRecord {
  id: string;
  text: string;
}

export async function readRecords(
  path: string,
  kind: RecordKind = "all"
): Promise<EncodableRecord[]> {
  const out: EncodableRecord[] = [];
  const rl = createInterface({ input: createReadStream(path), crlfDelay: Infinity });
  let lineno = 0;
  for await (const line of rl) {
    lineno += 1;
    const trimmed = line.trim();
    if (!trimmed) continue;
    let obj: Record<string, unknown>;
    try {
      obj = JSON.parse(trimmed);
    } catch (err) {
      throw new Error(`${path}:${lineno}: invalid JSON (${err})`);
    }
    if (typeof obj.text === "string") {
      if (kind === "queries") continue;
      const title = typeof obj.title === "string" ? obj.title : "";
      out.push({
        id: String(obj.id),
        text: title ? `${title}. ${obj.text}` : obj.text,
      });
    } else if (typeof obj.question === "string") {
      if (kind === "passages") continue;
      out.push({ id: String(obj.id), text: obj.question });
    } else {
      throw new Error(`${path}:${lineno}: neither a passage nor a query line`);
    }
  }
  return out;
}
