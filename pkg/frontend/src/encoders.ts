// Sentence encoders behind one batch interface. Transformer models load
// lazily through @huggingface/transformers; `hash-bow` is a deterministic
// signed feature-hashing encoder that needs no model files, so exports stay
// runnable offline.

export interface Encoder {
  name: string;
  encode(texts: string[]): Promise<number[][]>;
}

function fnv1a(token: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < token.length; i++) {
    h ^= token.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

export function hashBowEncoder(dim = 256): Encoder {
  if (dim < 2) throw new Error("hash-bow dim must be >= 2");
  return {
    name: `hash-bow-${dim}`,
    async encode(texts: string[]): Promise<number[][]> {
      return texts.map((text) => {
        const vec = new Array<number>(dim).fill(0);
        const tokens = text.toLowerCase().split(/[^0-9a-z]+/).filter(Boolean);
        for (const tok of tokens) {
          const h = fnv1a(tok);
          const sign = (h & 1) === 0 ? 1 : -1;
          vec[(h >>> 1) % dim] += sign;
        }
        if (tokens.length === 0) vec[0] = 1; // keep rows normalizable
        return vec;
      });
    },
  };
}

export async function transformerEncoder(model: string): Promise<Encoder> {
  let pipeline: (task: string, model: string) => Promise<any>;
  try {
    ({ pipeline } = await import("@huggingface/transformers"));
  } catch (err) {
    throw new Error(
      `encoder load failure: @huggingface/transformers unavailable (${err})`
    );
  }
  const extractor = await pipeline("feature-extraction", model);
  return {
    name: model,
    async encode(texts: string[]): Promise<number[][]> {
      // mean pooling, no normalization: raw encoder output goes to disk
      const output = await extractor(texts, { pooling: "mean", normalize: false });
      return output.tolist() as number[][];
    },
  };
}

export async function makeEncoder(model: string, hashDim = 256): Promise<Encoder> {
  if (model === "hash-bow") return hashBowEncoder(hashDim);
  return transformerEncoder(model);
}
