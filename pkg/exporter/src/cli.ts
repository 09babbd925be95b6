#!/usr/bin/env node
/**
 * attention-export --mode probs --out dump.jsonl [--window 32] [--seed 1]
 *                  [--corpus file.txt] [--max-records 2048] [--k 16]
 */

import { DEFAULT_JOB, ExportJob, ExportMode, runExport } from "./export";

function usage(): never {
  console.error(
    "usage: attention-export --mode probs|logits --out dump.jsonl " +
    "[--window N] [--seed N] [--corpus FILE] [--max-records N] [--k N]",
  );
  process.exit(2);
}

export function parseArgs(argv: string[]): ExportJob {
  const opts = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) usage();
    opts.set(key.slice(2), value);
  }
  const mode = opts.get("mode");
  const out = opts.get("out");
  if ((mode !== "probs" && mode !== "logits") || !out) usage();
  const num = (name: string, fallback: number): number => {
    const raw = opts.get(name);
    if (raw === undefined) return fallback;
    const parsed = Number(raw);
    if (!Number.isFinite(parsed)) usage();
    return parsed;
  };
  return {
    mode: mode as ExportMode,
    out,
    window: num("window", DEFAULT_JOB.window),
    seed: num("seed", DEFAULT_JOB.seed),
    corpusPath: opts.get("corpus") ?? null,
    maxRecords: num("max-records", DEFAULT_JOB.maxRecords as number),
    k: num("k", DEFAULT_JOB.k),
  };
}

if (require.main === module) {
  const job = parseArgs(process.argv.slice(2));
  const manifest = runExport(job);
  console.log(
    `wrote ${manifest.record_count} records (${manifest.windows} windows of ` +
    `n=${manifest.window}) to ${job.out}`,
  );
  console.log(`manifest mean tail mass at k=${manifest.recompute.k}: ` +
    `${manifest.recompute.mean_tv}`);
}
