import * as fs from "node:fs";

/**
 * EMB1 binary layout, little-endian throughout:
 *
 *   magic "EMB1" | u32 dim | u64 count
 *   per record: u16 id byte-length | id (UTF-8) | dim x f32
 */
export interface EmbRecord {
  id: string;
  values: Float32Array;
}

export function writeEmb1(path: string, dim: number, records: EmbRecord[]): void {
  const chunks: Buffer[] = [];
  const header = Buffer.alloc(16);
  header.write("EMB1", 0, "ascii");
  header.writeUInt32LE(dim, 4);
  header.writeBigUInt64LE(BigInt(records.length), 8);
  chunks.push(header);
  for (const record of records) {
    if (record.values.length !== dim) {
      throw new Error(
        `record ${record.id}: vector has ${record.values.length} values, header says ${dim}`,
      );
    }
    const idBytes = Buffer.from(record.id, "utf-8");
    if (idBytes.length > 0xffff) {
      throw new Error(`record id too long: ${record.id}`);
    }
    const prefix = Buffer.alloc(2);
    prefix.writeUInt16LE(idBytes.length, 0);
    const payload = Buffer.alloc(4 * dim);
    for (let j = 0; j < dim; j++) {
      payload.writeFloatLE(record.values[j], 4 * j);
    }
    chunks.push(prefix, idBytes, payload);
  }
  fs.writeFileSync(path, Buffer.concat(chunks));
}

/** Minimal reader used by the tests to self-check written files. */
export function readEmb1(path: string): { dim: number; records: EmbRecord[] } {
  const blob = fs.readFileSync(path);
  if (blob.subarray(0, 4).toString("ascii") !== "EMB1") {
    throw new Error(`${path}: bad magic`);
  }
  const dim = blob.readUInt32LE(4);
  const count = Number(blob.readBigUInt64LE(8));
  const records: EmbRecord[] = [];
  let offset = 16;
  for (let i = 0; i < count; i++) {
    const idLen = blob.readUInt16LE(offset);
    offset += 2;
    const id = blob.subarray(offset, offset + idLen).toString("utf-8");
    offset += idLen;
    const values = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      values[j] = blob.readFloatLE(offset + 4 * j);
    }
    offset += 4 * dim;
    records.push({ id, values });
  }
  if (offset !== blob.length) {
    throw new Error(`${path}: ${blob.length - offset} trailing bytes`);
  }
  return { dim, records };
}
