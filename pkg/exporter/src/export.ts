/**
 * Attention dump export.
 *
 * Writes the shared JSONL contract consumed by the analysis harness, one
 * record per (layer, head, query position):
 *
 *   {"layer": int, "head": int, "query": int,
 *    "mode": "probs" | "logits", "values": [float, ...]}
 *
 * plus a sibling manifest recording the model identifier, tokenizer hash,
 * window length, record count, and an independent recomputation of the
 * mean truncation error that downstream reports can be checked against.
 * Logits mode writes log-probabilities; certificates only ever depend on
 * score differences, so a global log-normalization shift is harmless.
 *
 * Windows are full fixed-length token slices; a trailing partial window is
 * dropped rather than padded, so every record's length reflects real keys.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { SAMPLE_TEXT } from "./corpus";
import { DEFAULT_CONFIG, ModelConfig, TinyAttentionModel, modelId } from "./model";
import { tokenize, tokenizerHash } from "./tokenizer";

export type ExportMode = "probs" | "logits";

export interface ExportJob {
  mode: ExportMode;
  out: string;
  window: number;
  seed: number;
  corpusPath?: string | null;
  maxRecords?: number | null;
  /** Top-k used for the manifest's mean-TV recomputation. */
  k: number;
}

export interface ExportManifest {
  model: string;
  seed: number;
  tokenizer_hash: string;
  window: number;
  mode: ExportMode;
  record_count: number;
  windows: number;
  corpus: { source: string; bytes: number };
  recompute: { k: number; mean_tv: number };
}

export const DEFAULT_JOB: Omit<ExportJob, "out" | "mode"> = {
  window: 32,
  seed: 1,
  corpusPath: null,
  maxRecords: 2048,
  k: 16,
};

/** Exact discarded mass of the k largest entries of one probability row. */
export function tailMassAtK(values: readonly number[], k: number): number {
  const kAdj = Math.min(k, values.length - 1);
  const sorted = Array.from(values).sort((a, b) => b - a);
  let head = 0;
  let total = 0;
  for (let i = 0; i < sorted.length; i++) {
    total += sorted[i];
    if (i < kAdj) head += sorted[i];
  }
  return (total - head) / total;
}

function softmax(row: readonly number[]): number[] {
  const max = Math.max(...row);
  const w = row.map((s) => Math.exp(s - max));
  const total = w.reduce((a, b) => a + b, 0);
  return w.map((x) => x / total);
}

export function runExport(job: ExportJob, cfg: ModelConfig = { ...DEFAULT_CONFIG }): ExportManifest {
  if (job.window < 2) throw new Error("window length must be at least 2");
  cfg = { ...cfg, seed: job.seed };
  const text = job.corpusPath ? fs.readFileSync(job.corpusPath, "utf-8") : SAMPLE_TEXT;
  const tokens = tokenize(text);
  const model = new TinyAttentionModel(cfg);

  const lines: string[] = [];
  let tvSum = 0;
  let windows = 0;
  const cap = job.maxRecords ?? Infinity;
  outer:
  for (let start = 0; start + job.window <= tokens.length; start += job.window) {
    const slice = tokens.slice(start, start + job.window);
    const maps = model.forward(slice);
    windows += 1;
    for (const map of maps) {
      for (let q = 0; q < job.window; q++) {
        if (lines.length >= cap) break outer;
        const probs = Array.from(map.probs[q]);
        const values = job.mode === "probs" ? probs : Array.from(map.logProbs[q]);
        lines.push(JSON.stringify({
          layer: map.layer,
          head: map.head,
          query: start + q,
          mode: job.mode,
          values,
        }));
        // independent of the harness: linear-space sort + tail sum over the
        // probabilities this record encodes
        tvSum += tailMassAtK(job.mode === "probs" ? values : softmax(values), job.k);
      }
    }
  }
  if (lines.length === 0) {
    throw new Error("corpus too short for even one full window");
  }

  fs.mkdirSync(path.dirname(path.resolve(job.out)), { recursive: true });
  fs.writeFileSync(job.out, lines.join("\n") + "\n", "utf-8");
  const manifest: ExportManifest = {
    model: modelId(cfg),
    seed: job.seed,
    tokenizer_hash: tokenizerHash(),
    window: job.window,
    mode: job.mode,
    record_count: lines.length,
    windows,
    corpus: {
      source: job.corpusPath ?? "builtin:sample-text",
      bytes: tokens.length,
    },
    recompute: { k: job.k, mean_tv: tvSum / lines.length },
  };
  fs.writeFileSync(manifestPath(job.out), JSON.stringify(manifest, null, 2) + "\n", "utf-8");
  return manifest;
}

export function manifestPath(outPath: string): string {
  return outPath.replace(/\.jsonl$/, "") + ".manifest.json";
}
