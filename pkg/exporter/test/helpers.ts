import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Write inventory lines (objects or raw strings) to a fresh temp file. */
export function writeTempInventory(lines: unknown[], name = "inv.jsonl"): string {
  const dir = mkdtempSync(join(tmpdir(), "exporter-test-"));
  const path = join(dir, name);
  const body = lines
    .map((line) => (typeof line === "string" ? line : JSON.stringify(line)))
    .join("\n");
  writeFileSync(path, `${body}\n`);
  return path;
}

/** A minimal valid entry for tests that only need structure. */
export function entry(
  lemma: string,
  pos: string,
  glosses: { definition: string; examples?: unknown[] }[],
): Record<string, unknown> {
  return { lemma, pos, glosses };
}
