import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";

import { describe, expect, it } from "vitest";

import { getEncoder, poolTokens } from "../src/encoder.js";
import { ExportJob, runExport, TOOL_VERSION } from "../src/export.js";
import { decodeStore } from "../src/semb.js";
import { tokenize } from "../src/tokenize.js";
import { entry, writeTempInventory } from "./helpers.js";

const ENCODER = getEncoder("hash-ngram-256");

function job(inventoryPaths: string[], outPath: string, extra: Partial<ExportJob> = {}): ExportJob {
  return {
    inventoryPaths,
    encoderId: "hash-ngram-256",
    outPath,
    normalize: false,
    batchSize: 64,
    ...extra,
  };
}

/** Expected float32 vector for pooling the given text, without normalization. */
function expectedVector(text: string): Float32Array {
  return new Float32Array(poolTokens(ENCODER, tokenize(text).map((t) => t.text)));
}

function loadRecords(path: string): Map<string, Float32Array> {
  const { records } = decodeStore(readFileSync(path));
  return new Map(records.map((r) => [r.key, r.values]));
}

function smallInventoryPath(): string {
  return writeTempInventory(
    [
      entry("bank", "noun", [
        {
          definition: "a financial institution for deposits",
          examples: [
            { text: "She visited the bank today", target_start: 16, target_end: 20 },
            { text: "Deposits were counted at the bank" },
          ],
        },
        { definition: "the sloping edge of a river" },
      ]),
      entry("mat", "noun", [{ definition: "a woven floor covering" }]),
    ],
    "lex_t.jsonl",
  );
}

describe("runExport", () => {
  it("writes one record per gloss and example, in input order", () => {
    const inv = smallInventoryPath();
    const out = join(dirname(inv), "out.emb");
    const result = runExport(job([inv], out));
    expect(result.count).toBe(5);
    expect(result.dim).toBe(256);
    const { dim, records } = decodeStore(readFileSync(out));
    expect(dim).toBe(256);
    expect(records.map((r) => r.key)).toEqual([
      "g:lex_t:bank:noun:0",
      "c:lex_t:bank:noun:0:0",
      "c:lex_t:bank:noun:0:1",
      "g:lex_t:bank:noun:1",
      "g:lex_t:mat:noun:0",
    ]);
  });

  it("pools gloss definitions over every token", () => {
    const inv = smallInventoryPath();
    const out = join(dirname(inv), "out.emb");
    runExport(job([inv], out));
    const vectors = loadRecords(out);
    expect([...vectors.get("g:lex_t:mat:noun:0")!]).toEqual([
      ...expectedVector("a woven floor covering"),
    ]);
  });

  it("pools example sentences over the stated target span", () => {
    const inv = smallInventoryPath();
    const out = join(dirname(inv), "out.emb");
    runExport(job([inv], out));
    const vectors = loadRecords(out);
    expect([...vectors.get("c:lex_t:bank:noun:0:0")!]).toEqual([...expectedVector("bank")]);
  });

  it("falls back to the lemma occurrence when no span is stated", () => {
    const path = writeTempInventory([
      entry("deposit", "noun", [
        { definition: "money placed in a bank", examples: [{ text: "Her Deposit cleared" }] },
      ]),
    ]);
    const out = join(dirname(path), "out.emb");
    const result = runExport(job([path], out));
    expect(result.warnings).toEqual([]);
    expect([...loadRecords(out).get("c:inv:deposit:noun:0:0")!]).toEqual([
      ...expectedVector("deposit"),
    ]);
  });

  it("falls back to the whole sentence, with a warning, when the lemma is absent", () => {
    const path = writeTempInventory([
      entry("deposit", "noun", [
        { definition: "money placed in a bank", examples: [{ text: "The funds cleared" }] },
      ]),
    ]);
    const out = join(dirname(path), "out.emb");
    const result = runExport(job([path], out));
    expect(result.warnings).toHaveLength(1);
    expect(result.warnings[0]).toMatch(
      /c:inv:deposit:noun:0:0: lemma 'deposit' not found in example; pooled the whole sentence/,
    );
    expect([...loadRecords(out).get("c:inv:deposit:noun:0:0")!]).toEqual([
      ...expectedVector("The funds cleared"),
    ]);
  });

  it("falls back to the whole sentence when the span covers no token", () => {
    const path = writeTempInventory([
      entry("dash", "noun", [
        {
          definition: "a punctuation mark",
          examples: [{ text: "ab -- cd", target_start: 3, target_end: 5 }],
        },
      ]),
    ]);
    const out = join(dirname(path), "out.emb");
    const result = runExport(job([path], out));
    expect(result.warnings).toHaveLength(1);
    expect(result.warnings[0]).toMatch(/covers no token; pooled the whole sentence/);
    expect([...loadRecords(out).get("c:inv:dash:noun:0:0")!]).toEqual([...expectedVector("ab cd")]);
  });

  it("stores a zero vector, with a warning, for tokenless text", () => {
    const path = writeTempInventory([entry("dash", "noun", [{ definition: "-- !!" }])]);
    const out = join(dirname(path), "out.emb");
    const result = runExport(job([path], out, { normalize: true }));
    expect(result.warnings).toEqual(["g:inv:dash:noun:0: text has no tokens; stored a zero vector"]);
    expect([...loadRecords(out).get("g:inv:dash:noun:0")!]).toEqual(new Array(256).fill(0));
  });

  it("produces identical bytes for any batch size", () => {
    const inv = smallInventoryPath();
    const outA = join(dirname(inv), "a.emb");
    const outB = join(dirname(inv), "b.emb");
    runExport(job([inv], outA, { batchSize: 1 }));
    runExport(job([inv], outB, { batchSize: 64 }));
    expect(readFileSync(outA).equals(readFileSync(outB))).toBe(true);
  });

  it("encodes the same sentence to identical vectors within one job", () => {
    const path = writeTempInventory([
      entry("echo", "noun", [
        { definition: "a repeated sound wave" },
        { definition: "a repeated sound wave" },
      ]),
    ]);
    const out = join(dirname(path), "out.emb");
    runExport(job([path], out));
    const vectors = loadRecords(out);
    expect([...vectors.get("g:inv:echo:noun:0")!]).toEqual([...vectors.get("g:inv:echo:noun:1")!]);
  });

  it("normalizes stored vectors to unit length when asked", () => {
    const inv = smallInventoryPath();
    const out = join(dirname(inv), "norm.emb");
    runExport(job([inv], out, { normalize: true }));
    for (const [key, values] of loadRecords(out)) {
      let squares = 0;
      for (const value of values) {
        squares += value * value;
      }
      expect(Math.abs(Math.sqrt(squares) - 1), key).toBeLessThan(1e-5);
    }
  });

  it("writes a manifest describing the export", () => {
    const inv = smallInventoryPath();
    const out = join(dirname(inv), "out.emb");
    const argv = ["export-embeddings", "--inventory", inv, "--out", out];
    const result = runExport(job([inv], out), argv);
    expect(result.manifestPath).toBe(`${out}.manifest.json`);
    const manifest = JSON.parse(readFileSync(result.manifestPath, "utf8"));
    expect(manifest.command).toBe("export-embeddings");
    expect(manifest.arguments).toEqual(argv);
    expect(manifest.encoder).toEqual({
      id: "hash-ngram-256",
      dim: 256,
      preprocessing: ENCODER.preprocessing,
    });
    expect(manifest.dim).toBe(256);
    expect(manifest.count).toBe(5);
    expect(manifest.normalize).toBe(false);
    expect(manifest.batch).toBe(64);
    expect(manifest.precision).toMatch(/float32/);
    expect(manifest.tool_version).toBe(TOOL_VERSION);
    expect(manifest.warnings).toEqual([]);
    expect(manifest.wall_time_s).toBeGreaterThanOrEqual(0);
    const digest = createHash("sha256").update(readFileSync(inv)).digest("hex");
    expect(manifest.inputs).toEqual({ [inv]: digest });
  });

  it("records span fallbacks in the manifest warnings", () => {
    const path = writeTempInventory([
      entry("deposit", "noun", [
        { definition: "money placed in a bank", examples: [{ text: "The funds cleared" }] },
      ]),
    ]);
    const out = join(dirname(path), "out.emb");
    runExport(job([path], out));
    const manifest = JSON.parse(readFileSync(`${out}.manifest.json`, "utf8"));
    expect(manifest.warnings).toHaveLength(1);
    expect(manifest.warnings[0]).toMatch(/pooled the whole sentence/);
  });

  it("merges several inventories and keeps command-line order", () => {
    const a = writeTempInventory([entry("cat", "noun", [{ definition: "a small animal" }])], "lex_a.jsonl");
    const b = writeTempInventory([entry("dog", "noun", [{ definition: "a loyal animal" }])], "lex_b.jsonl");
    const out = join(dirname(a), "merged.emb");
    runExport(job([b, a], out));
    const { records } = decodeStore(readFileSync(out));
    expect(records.map((r) => r.key)).toEqual(["g:lex_b:dog:noun:0", "g:lex_a:cat:noun:0"]);
  });

  it("rejects duplicate inventory names", () => {
    const inv = smallInventoryPath();
    const out = join(dirname(inv), "out.emb");
    expect(() => runExport(job([inv, inv], out))).toThrow(/duplicate inventory name 'lex_t'/);
  });

  it("rejects unknown encoders before reading any input", () => {
    expect(() => runExport(job(["/nonexistent.jsonl"], "/tmp/x.emb", { encoderId: "nope" }))).toThrow(
      /unknown encoder id 'nope'/,
    );
  });

  it("rejects bad batch sizes and empty inventory lists", () => {
    const inv = smallInventoryPath();
    const out = join(dirname(inv), "out.emb");
    expect(() => runExport(job([inv], out, { batchSize: 0 }))).toThrow(/--batch must be a positive/);
    expect(() => runExport(job([inv], out, { batchSize: 2.5 }))).toThrow(/--batch must be a positive/);
    expect(() => runExport(job([], out))).toThrow(/at least one --inventory/);
  });

  it("reports write failures with the target path", () => {
    const inv = smallInventoryPath();
    expect(() => runExport(job([inv], "/nonexistent-dir/out.emb"))).toThrow(
      /cannot write \/nonexistent-dir\/out\.emb/,
    );
  });
});
