import { readDataset, DatasetFormat } from "./formats.js";
import { loadEncoder } from "./encoders.js";
import { writeEmb1, EmbRecord } from "./emb1.js";

export interface ExportJob {
  input: string;
  format: DatasetFormat;
  encoder: string;
  out: string;
  batchSize: number;
  maxLen: number;
}

export interface ExportResult {
  count: number;
  dim: number;
  encoder: string;
}

/**
 * Encode every dataset sentence and write one EMB1 record per document
 * id, in dataset order.  The only text preprocessing is the encoder's
 * truncation to `maxLen`.
 */
export async function runExport(job: ExportJob): Promise<ExportResult> {
  if (job.batchSize < 1) {
    throw new Error(`batch size must be >= 1, got ${job.batchSize}`);
  }
  if (job.maxLen < 1) {
    throw new Error(`max sequence length must be >= 1, got ${job.maxLen}`);
  }
  const rows = readDataset(job.input, job.format);
  const encoder = await loadEncoder(job.encoder);
  const records: EmbRecord[] = [];
  for (let start = 0; start < rows.length; start += job.batchSize) {
    const batch = rows.slice(start, start + job.batchSize);
    const vectors = await encoder.encodeBatch(batch.map((r) => r.text), job.maxLen);
    batch.forEach((row, i) => records.push({ id: row.id, values: vectors[i] }));
  }
  writeEmb1(job.out, encoder.dim, records);
  return { count: records.length, dim: encoder.dim, encoder: encoder.name };
}
