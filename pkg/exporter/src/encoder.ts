/**
 * Sentence encoders and the registry used to look them up by id.
 *
 * The built-in encoders are fully offline: a token is mapped to a set of
 * sub-token features (the word itself plus character trigrams), each feature
 * is hashed into a signed bucket, and the resulting feature vector is length
 * normalized. Sentence and span vectors are averages of token vectors, so
 * the same text always encodes to the same bytes on every platform.
 */

import { ExportError } from "./errors.js";

/** A deterministic text encoder producing fixed-width vectors. */
export interface SentenceEncoder {
  id: string;
  dim: number;
  /** Human-readable summary of the text pipeline, recorded in manifests. */
  preprocessing: string;
  /** Unit-length vector for a single lowercased token. */
  tokenVector(token: string): Float64Array;
}

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;

/** FNV-1a hash of the UTF-8 bytes of `text`, as an unsigned 32-bit value. */
export function fnv1a32(text: string): number {
  let hash = FNV_OFFSET;
  for (const byte of Buffer.from(text, "utf8")) {
    hash ^= byte;
    hash = Math.imul(hash, FNV_PRIME);
  }
  return hash >>> 0;
}

/** Sub-token features for one token: the word plus padded char trigrams. */
export function subTokenFeatures(token: string): string[] {
  const features = [`w:${token}`];
  const padded = `^${token}$`;
  for (let i = 0; i + 3 <= padded.length; i++) {
    features.push(`3:${padded.slice(i, i + 3)}`);
  }
  return features;
}

function makeHashNgramEncoder(dim: number): SentenceEncoder {
  return {
    id: `hash-ngram-${dim}`,
    dim,
    preprocessing:
      "lowercase; alphanumeric tokens; word and character-trigram features; " +
      "FNV-1a 32-bit feature hashing; unit-length token vectors",
    tokenVector(token: string): Float64Array {
      const vector = new Float64Array(dim);
      for (const feature of subTokenFeatures(token)) {
        const hash = fnv1a32(feature);
        const bucket = hash % dim;
        const sign = ((hash >>> 8) & 1) === 0 ? 1 : -1;
        vector[bucket]! += sign;
      }
      let squares = 0;
      for (const value of vector) {
        squares += value * value;
      }
      const norm = Math.sqrt(squares);
      if (norm > 0) {
        for (let i = 0; i < dim; i++) {
          vector[i]! /= norm;
        }
      }
      return vector;
    },
  };
}

/** Average the token vectors; all zeros when there are no tokens. */
export function poolTokens(encoder: SentenceEncoder, tokens: string[]): Float64Array {
  const pooled = new Float64Array(encoder.dim);
  if (tokens.length === 0) {
    return pooled;
  }
  for (const token of tokens) {
    const vector = encoder.tokenVector(token);
    for (let i = 0; i < encoder.dim; i++) {
      pooled[i]! += vector[i]!;
    }
  }
  for (let i = 0; i < encoder.dim; i++) {
    pooled[i]! /= tokens.length;
  }
  return pooled;
}

const REGISTRY = new Map<string, SentenceEncoder>();

/** Make an encoder available to `getEncoder`; ids must be unique. */
export function registerEncoder(encoder: SentenceEncoder): void {
  if (REGISTRY.has(encoder.id)) {
    throw new ExportError(`encoder id already registered: ${encoder.id}`);
  }
  REGISTRY.set(encoder.id, encoder);
}

/** Ids of all registered encoders, sorted for stable error messages. */
export function availableEncoders(): string[] {
  return [...REGISTRY.keys()].sort();
}

/** Look up an encoder by id. */
export function getEncoder(id: string): SentenceEncoder {
  const encoder = REGISTRY.get(id);
  if (encoder === undefined) {
    throw new ExportError(`unknown encoder id '${id}' (available: ${availableEncoders().join(", ")})`);
  }
  return encoder;
}

export const DEFAULT_ENCODER_ID = "hash-ngram-256";

registerEncoder(makeHashNgramEncoder(256));
registerEncoder(makeHashNgramEncoder(512));
