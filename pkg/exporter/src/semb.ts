/**
 * Reader and writer for the binary embedding store consumed by the
 * sense-align toolkit.
 *
 * Layout, all little-endian:
 *   header:  magic "SEMB" (4 bytes), version u8, dim u32, count u64
 *   record:  key length u16, key bytes (UTF-8), dim float32 values
 */

import { ExportError } from "./errors.js";

export const MAGIC = "SEMB";
export const FORMAT_VERSION = 1;
export const MIN_DIM = 8;

const HEADER_SIZE = 17;
const MAX_KEY_BYTES = 0xffff;

/** One keyed vector, in the order it will be written. */
export interface EmbeddingRecord {
  key: string;
  values: Float32Array;
}

/** Serialize records to store bytes, preserving record order. */
export function encodeStore(records: EmbeddingRecord[], dim: number): Buffer {
  if (!Number.isInteger(dim) || dim < MIN_DIM) {
    throw new ExportError(`dim must be an integer >= ${MIN_DIM}, got ${dim}`);
  }
  const header = Buffer.alloc(HEADER_SIZE);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt8(FORMAT_VERSION, 4);
  header.writeUInt32LE(dim, 5);
  header.writeBigUInt64LE(BigInt(records.length), 9);

  const parts: Buffer[] = [header];
  const seen = new Set<string>();
  for (const record of records) {
    const keyBytes = Buffer.from(record.key, "utf8");
    if (keyBytes.length === 0 || keyBytes.length > MAX_KEY_BYTES) {
      throw new ExportError(`key must encode to 1..${MAX_KEY_BYTES} bytes: ${record.key}`);
    }
    if (seen.has(record.key)) {
      throw new ExportError(`duplicate key: ${record.key}`);
    }
    seen.add(record.key);
    if (record.values.length !== dim) {
      throw new ExportError(
        `vector for ${record.key} has dim ${record.values.length}, expected ${dim}`,
      );
    }
    for (const value of record.values) {
      if (!Number.isFinite(value)) {
        throw new ExportError(`non-finite value in vector for ${record.key}`);
      }
    }
    const prefix = Buffer.alloc(2);
    prefix.writeUInt16LE(keyBytes.length, 0);
    // Copy so later mutation of the caller's array cannot change written bytes.
    parts.push(prefix, keyBytes, Buffer.from(new Float32Array(record.values).buffer));
  }
  return Buffer.concat(parts);
}

/** Parse store bytes back into records, validating the full layout. */
export function decodeStore(data: Buffer): { dim: number; records: EmbeddingRecord[] } {
  if (data.length < HEADER_SIZE) {
    throw new ExportError(`store is truncated: ${data.length} bytes, header needs ${HEADER_SIZE}`);
  }
  if (data.toString("ascii", 0, 4) !== MAGIC) {
    throw new ExportError("bad magic: not an embedding store");
  }
  const version = data.readUInt8(4);
  if (version !== FORMAT_VERSION) {
    throw new ExportError(`unsupported store version ${version}, expected ${FORMAT_VERSION}`);
  }
  const dim = data.readUInt32LE(5);
  if (dim < MIN_DIM) {
    throw new ExportError(`store dim ${dim} is below the minimum of ${MIN_DIM}`);
  }
  const count = data.readBigUInt64LE(9);

  const records: EmbeddingRecord[] = [];
  const seen = new Set<string>();
  let offset = HEADER_SIZE;
  for (let i = 0n; i < count; i++) {
    if (offset + 2 > data.length) {
      throw new ExportError(`store is truncated in record ${records.length}`);
    }
    const keyLength = data.readUInt16LE(offset);
    offset += 2;
    const end = offset + keyLength + dim * 4;
    if (keyLength === 0 || end > data.length) {
      throw new ExportError(`store is truncated in record ${records.length}`);
    }
    const key = data.toString("utf8", offset, offset + keyLength);
    offset += keyLength;
    if (seen.has(key)) {
      throw new ExportError(`duplicate key: ${key}`);
    }
    seen.add(key);
    const values = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      values[j] = data.readFloatLE(offset + j * 4);
      if (!Number.isFinite(values[j])) {
        throw new ExportError(`non-finite value in vector for ${key}`);
      }
    }
    offset = end;
    records.push({ key, values });
  }
  if (offset !== data.length) {
    throw new ExportError(`trailing bytes after last record: ${data.length - offset}`);
  }
  return { dim, records };
}
