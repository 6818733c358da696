/**
 * Batched embedding export.
 *
 * One export job reads inventory files, encodes a vector per gloss
 * definition and per example sentence, and writes a binary store plus a
 * sibling manifest. Store keys follow the sense-align conventions:
 *
 *   g:<inventory>:<lemma>:<pos>:<index>        gloss definition
 *   c:<inventory>:<lemma>:<pos>:<index>:<idx>  example sentence <idx>
 *
 * Records are written in input order: inventories in command-line order,
 * entries in file order, the gloss vector before its example vectors.
 */

import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";

import { getEncoder, poolTokens, SentenceEncoder } from "./encoder.js";
import { ExportError } from "./errors.js";
import { Gloss, Inventory, loadInventory } from "./inventory.js";
import { EmbeddingRecord, encodeStore } from "./semb.js";
import { tokenize } from "./tokenize.js";

export const TOOL_VERSION = "0.1.0";

/** Everything needed to run one export. */
export interface ExportJob {
  inventoryPaths: string[];
  encoderId: string;
  outPath: string;
  normalize: boolean;
  batchSize: number;
}

export interface ExportResult {
  outPath: string;
  manifestPath: string;
  dim: number;
  count: number;
  warnings: string[];
}

/** One sentence waiting to be encoded. */
interface PendingText {
  key: string;
  text: string;
  /** Half-open character span to pool over; null pools the whole sentence. */
  span: [number, number] | null;
}

function sha256File(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex");
}

/**
 * Resolve the character span to pool for one example sentence.
 *
 * Preference order: the span stated in the inventory, then the first
 * case-insensitive occurrence of the lemma, then the whole sentence. The
 * whole-sentence fallback is recorded as a manifest warning so downstream
 * consumers can see which vectors lack a focused target.
 */
export function resolveSpan(
  gloss: Gloss,
  exampleIndex: number,
  warnings: string[],
): [number, number] | null {
  const example = gloss.examples[exampleIndex]!;
  let span = example.targetSpan;
  if (span === null) {
    const at = example.text.toLowerCase().indexOf(gloss.lemma);
    if (at < 0) {
      warnings.push(
        `c:${gloss.id}:${exampleIndex}: lemma '${gloss.lemma}' not found in example; ` +
          "pooled the whole sentence",
      );
      return null;
    }
    span = [at, at + gloss.lemma.length];
  }
  const covered = tokenize(example.text).some((t) => t.start < span![1] && span![0] < t.end);
  if (!covered) {
    warnings.push(
      `c:${gloss.id}:${exampleIndex}: target span (${span[0]}, ${span[1]}) covers no token; ` +
        "pooled the whole sentence",
    );
    return null;
  }
  return span;
}

function collectTexts(inventories: Inventory[], warnings: string[]): PendingText[] {
  const pending: PendingText[] = [];
  for (const inv of inventories) {
    for (const gloss of inv.glosses) {
      pending.push({ key: `g:${gloss.id}`, text: gloss.definition, span: null });
      for (let i = 0; i < gloss.examples.length; i++) {
        pending.push({
          key: `c:${gloss.id}:${i}`,
          text: gloss.examples[i]!.text,
          span: resolveSpan(gloss, i, warnings),
        });
      }
    }
  }
  return pending;
}

function encodeOne(
  encoder: SentenceEncoder,
  item: PendingText,
  normalize: boolean,
  warnings: string[],
): Float32Array {
  let tokens = tokenize(item.text);
  if (item.span !== null) {
    const [start, end] = item.span;
    tokens = tokens.filter((t) => t.start < end && start < t.end);
  }
  const pooled = poolTokens(
    encoder,
    tokens.map((t) => t.text),
  );
  let squares = 0;
  for (const value of pooled) {
    squares += value * value;
  }
  const norm = Math.sqrt(squares);
  if (norm === 0) {
    warnings.push(`${item.key}: text has no tokens; stored a zero vector`);
  } else if (normalize) {
    for (let i = 0; i < pooled.length; i++) {
      pooled[i]! /= norm;
    }
  }
  // Single rounding step from float64 accumulation to float32 storage.
  return new Float32Array(pooled);
}

/** Run one export end to end; returns what was written. */
export function runExport(job: ExportJob, argv: string[] = []): ExportResult {
  if (!Number.isInteger(job.batchSize) || job.batchSize < 1) {
    throw new ExportError(`--batch must be a positive integer, got ${job.batchSize}`);
  }
  if (job.inventoryPaths.length === 0) {
    throw new ExportError("at least one --inventory path is required");
  }
  const encoder = getEncoder(job.encoderId);
  const started = process.hrtime.bigint();

  const inventories: Inventory[] = [];
  const names = new Set<string>();
  for (const path of job.inventoryPaths) {
    const inv = loadInventory(path);
    if (names.has(inv.name)) {
      throw new ExportError(`duplicate inventory name '${inv.name}' from ${path}`);
    }
    names.add(inv.name);
    inventories.push(inv);
  }

  const warnings: string[] = [];
  const pending = collectTexts(inventories, warnings);
  const records: EmbeddingRecord[] = [];
  for (let offset = 0; offset < pending.length; offset += job.batchSize) {
    const batch = pending.slice(offset, offset + job.batchSize);
    try {
      for (const item of batch) {
        records.push({ key: item.key, values: encodeOne(encoder, item, job.normalize, warnings) });
      }
    } catch (exc) {
      if (exc instanceof RangeError) {
        throw new ExportError(
          `ran out of memory while encoding (batch size ${job.batchSize}); ` +
            "retry with a smaller --batch",
        );
      }
      throw exc;
    }
  }

  const bytes = encodeStore(records, encoder.dim);
  try {
    writeFileSync(job.outPath, bytes);
  } catch (exc) {
    throw new ExportError(`cannot write ${job.outPath}: ${(exc as Error).message}`);
  }

  const inputs: Record<string, string> = {};
  for (const path of [...job.inventoryPaths].sort()) {
    inputs[path] = sha256File(path);
  }
  const wallTime = Number(process.hrtime.bigint() - started) / 1e9;
  const manifest = {
    command: "export-embeddings",
    arguments: argv,
    encoder: { id: encoder.id, dim: encoder.dim, preprocessing: encoder.preprocessing },
    dim: encoder.dim,
    count: records.length,
    normalize: job.normalize,
    batch: job.batchSize,
    precision: "float32 little-endian, computed in float64 and rounded once at storage",
    inputs,
    tool_version: TOOL_VERSION,
    warnings,
    wall_time_s: Math.round(wallTime * 1e6) / 1e6,
  };
  const manifestPath = `${job.outPath}.manifest.json`;
  try {
    writeFileSync(manifestPath, `${JSON.stringify(manifest, null, 1)}\n`);
  } catch (exc) {
    throw new ExportError(`cannot write ${manifestPath}: ${(exc as Error).message}`);
  }

  return {
    outPath: job.outPath,
    manifestPath,
    dim: encoder.dim,
    count: records.length,
    warnings,
  };
}
