/**
 * Sentence encoders behind one interface.
 *
 * `hashed:<dim>[:<seed>]` is a deterministic signed random-projection
 * bag encoder: it needs no model files, runs anywhere, and produces
 * byte-identical output for identical jobs, which the tests rely on.
 *
 * `xenova:<model-id>` adapts any @xenova/transformers feature-extraction
 * model (e.g. `xenova:Xenova/all-MiniLM-L6-v2`). The package is an
 * optional install; a missing package or model surfaces as
 * EncoderLoadFailure.
 */

export interface Encoder {
  name: string;
  dim: number;
  encodeBatch(texts: string[], maxLen: number): Promise<Float32Array[]>;
}

export class EncoderLoadFailure extends Error {}

const MASK64 = (1n << 64n) - 1n;
const GOLDEN64 = 0x9e3779b97f4a7c15n;

function splitmix64Mix(z: bigint): bigint {
  z &= MASK64;
  z ^= z >> 30n;
  z = (z * 0xbf58476d1ce4e5b9n) & MASK64;
  z ^= z >> 27n;
  z = (z * 0x94d049bb133111ebn) & MASK64;
  z ^= z >> 31n;
  return z;
}

function fnv1a64(data: Buffer): bigint {
  let h = 0xcbf29ce484222325n;
  for (const byte of data) {
    h ^= BigInt(byte);
    h = (h * 0x100000001b3n) & MASK64;
  }
  return h;
}

class HashedEncoder implements Encoder {
  readonly name: string;
  readonly dim: number;
  private readonly seed: bigint;
  private readonly cache = new Map<string, Float64Array>();

  constructor(dim: number, seed: number) {
    if (!Number.isInteger(dim) || dim < 1) {
      throw new EncoderLoadFailure(`hashed encoder dim must be a positive integer, got ${dim}`);
    }
    this.name = `hashed:${dim}:${seed}`;
    this.dim = dim;
    this.seed = BigInt(seed) & MASK64;
  }

  private pattern(token: string): Float64Array {
    const hit = this.cache.get(token);
    if (hit) return hit;
    const h = fnv1a64(Buffer.from(token, "utf-8"));
    const out = new Float64Array(this.dim);
    for (let j = 0; j < this.dim; j++) {
      const mixed = splitmix64Mix(((h + BigInt(j) * GOLDEN64) & MASK64) ^ this.seed);
      out[j] = (mixed & 1n) === 1n ? 1.0 : -1.0;
    }
    this.cache.set(token, out);
    return out;
  }

  async encodeBatch(texts: string[], maxLen: number): Promise<Float32Array[]> {
    return texts.map((text) => {
      const tokens = text.split(/\s+/).filter((t) => t.length > 0).slice(0, maxLen);
      const sum = new Float64Array(this.dim);
      for (const token of tokens) {
        const pat = this.pattern(token);
        for (let j = 0; j < this.dim; j++) sum[j] += pat[j];
      }
      let norm = 0;
      for (let j = 0; j < this.dim; j++) norm += sum[j] * sum[j];
      norm = Math.sqrt(norm);
      const out = new Float32Array(this.dim);
      if (norm > 0) {
        for (let j = 0; j < this.dim; j++) out[j] = sum[j] / norm;
      }
      return out;
    });
  }
}

class XenovaEncoder implements Encoder {
  readonly name: string;
  dim = 0;
  private extractor: any;

  private constructor(name: string, extractor: any, dim: number) {
    this.name = name;
    this.extractor = extractor;
    this.dim = dim;
  }

  static async load(modelId: string): Promise<XenovaEncoder> {
    const moduleName = "@xenova/transformers";
    let pipeline: any;
    try {
      ({ pipeline } = await import(moduleName));
    } catch (err) {
      throw new EncoderLoadFailure(
        `encoder 'xenova:${modelId}' needs the optional ${moduleName} package ` +
          `(npm install ${moduleName}): ${String(err)}`,
      );
    }
    let extractor: any;
    try {
      extractor = await pipeline("feature-extraction", modelId);
    } catch (err) {
      throw new EncoderLoadFailure(`cannot load model '${modelId}': ${String(err)}`);
    }
    const probe = await extractor("probe", { pooling: "mean", normalize: true });
    const dim = probe.dims[probe.dims.length - 1];
    return new XenovaEncoder(`xenova:${modelId}`, extractor, dim);
  }

  async encodeBatch(texts: string[], maxLen: number): Promise<Float32Array[]> {
    const output = await this.extractor(texts, {
      pooling: "mean",
      normalize: true,
      truncation: true,
      max_length: maxLen,
    });
    const flat: Float32Array = Float32Array.from(output.data);
    return texts.map((_, i) => flat.slice(i * this.dim, (i + 1) * this.dim));
  }
}

export async function loadEncoder(spec: string): Promise<Encoder> {
  const [kind, ...rest] = spec.split(":");
  if (kind === "hashed") {
    const dim = rest.length > 0 ? Number(rest[0]) : 256;
    const seed = rest.length > 1 ? Number(rest[1]) : 0;
    if (Number.isNaN(dim) || Number.isNaN(seed)) {
      throw new EncoderLoadFailure(`bad hashed encoder spec: ${spec}`);
    }
    return new HashedEncoder(dim, seed);
  }
  if (kind === "xenova") {
    if (rest.length === 0) {
      throw new EncoderLoadFailure("xenova encoder needs a model id, e.g. xenova:Xenova/all-MiniLM-L6-v2");
    }
    return XenovaEncoder.load(rest.join(":"));
  }
  throw new EncoderLoadFailure(
    `unknown encoder '${spec}' (expected hashed:<dim>[:<seed>] or xenova:<model-id>)`,
  );
}
