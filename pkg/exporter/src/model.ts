/**
 * A small self-contained multi-head attention encoder.
 *
 * Weights are generated from a seed, so the "model" is fully determined by
 * its identifier and needs no checkpoint on disk. The forward pass returns
 * every attention row (probabilities and log-probabilities) per layer,
 * head and query position; that is all the exporter consumes.
 */

import { Rng } from "./rng";
import { VOCAB_SIZE } from "./tokenizer";

export interface ModelConfig {
  layers: number;
  heads: number;
  dModel: number;
  dHead: number;
  maxWindow: number;
  seed: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  layers: 2,
  heads: 2,
  dModel: 32,
  dHead: 16,
  maxWindow: 512,
  seed: 1,
};

export function modelId(cfg: ModelConfig): string {
  return `tiny-attn-l${cfg.layers}h${cfg.heads}d${cfg.dModel}@seed${cfg.seed}`;
}

/** One attention map: rows[q] is the distribution over key positions. */
export interface AttentionRows {
  layer: number;
  head: number;
  probs: Float64Array[];
  logProbs: Float64Array[];
}

interface HeadWeights {
  wq: Float64Array;
  wk: Float64Array;
  wv: Float64Array;
}

interface LayerWeights {
  heads: HeadWeights[];
  wo: Float64Array; // (heads*dHead) x dModel
}

function matmul(
  x: Float64Array, n: number, dIn: number, w: Float64Array, dOut: number,
): Float64Array {
  const out = new Float64Array(n * dOut);
  for (let i = 0; i < n; i++) {
    for (let t = 0; t < dIn; t++) {
      const xv = x[i * dIn + t];
      if (xv === 0) continue;
      const wRow = t * dOut;
      for (let j = 0; j < dOut; j++) out[i * dOut + j] += xv * w[wRow + j];
    }
  }
  return out;
}

/** Row-wise RMS normalization; keeps logits in a sane range. */
function rmsNorm(x: Float64Array, n: number, d: number): Float64Array {
  const out = new Float64Array(n * d);
  for (let i = 0; i < n; i++) {
    let ss = 0;
    for (let j = 0; j < d; j++) ss += x[i * d + j] ** 2;
    const inv = 1.0 / Math.sqrt(ss / d + 1e-8);
    for (let j = 0; j < d; j++) out[i * d + j] = x[i * d + j] * inv;
  }
  return out;
}

function softmaxRow(scores: Float64Array): { probs: Float64Array; logProbs: Float64Array } {
  let max = -Infinity;
  for (const s of scores) if (s > max) max = s;
  let total = 0;
  const probs = new Float64Array(scores.length);
  for (let j = 0; j < scores.length; j++) {
    probs[j] = Math.exp(scores[j] - max);
    total += probs[j];
  }
  const logTotal = max + Math.log(total);
  const logProbs = new Float64Array(scores.length);
  for (let j = 0; j < scores.length; j++) {
    probs[j] /= total;
    logProbs[j] = scores[j] - logTotal;
  }
  return { probs, logProbs };
}

export class TinyAttentionModel {
  readonly cfg: ModelConfig;
  private readonly embed: Float64Array;
  private readonly pos: Float64Array;
  private readonly layers: LayerWeights[];

  constructor(cfg: ModelConfig = DEFAULT_CONFIG) {
    this.cfg = cfg;
    const rng = new Rng(cfg.seed);
    const scale = 1.0 / Math.sqrt(cfg.dModel);
    this.embed = rng.gaussMatrix(VOCAB_SIZE, cfg.dModel, 1.0);
    this.pos = rng.gaussMatrix(cfg.maxWindow, cfg.dModel, 0.5);
    this.layers = [];
    for (let l = 0; l < cfg.layers; l++) {
      const heads: HeadWeights[] = [];
      for (let h = 0; h < cfg.heads; h++) {
        heads.push({
          wq: rng.gaussMatrix(cfg.dModel, cfg.dHead, scale * 3.0),
          wk: rng.gaussMatrix(cfg.dModel, cfg.dHead, scale * 3.0),
          wv: rng.gaussMatrix(cfg.dModel, cfg.dHead, scale),
        });
      }
      this.layers.push({
        heads,
        wo: rng.gaussMatrix(cfg.heads * cfg.dHead, cfg.dModel, scale),
      });
    }
  }

  /** Bidirectional attention maps for one token window (2 <= n <= maxWindow). */
  forward(tokens: number[]): AttentionRows[] {
    const { dModel, dHead, heads, layers, maxWindow } = this.cfg;
    const n = tokens.length;
    if (n < 2 || n > maxWindow) {
      throw new Error(`window length ${n} outside [2, ${maxWindow}]`);
    }
    let x = new Float64Array(n * dModel);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < dModel; j++) {
        x[i * dModel + j] = this.embed[tokens[i] * dModel + j] + this.pos[i * dModel + j];
      }
    }
    const maps: AttentionRows[] = [];
    const invSqrt = 1.0 / Math.sqrt(dHead);
    for (let l = 0; l < layers; l++) {
      const normed = rmsNorm(x, n, dModel);
      const mixed = new Float64Array(n * heads * dHead);
      for (let h = 0; h < heads; h++) {
        const w = this.layers[l].heads[h];
        const q = matmul(normed, n, dModel, w.wq, dHead);
        const k = matmul(normed, n, dModel, w.wk, dHead);
        const v = matmul(normed, n, dModel, w.wv, dHead);
        const probsRows: Float64Array[] = [];
        const logRows: Float64Array[] = [];
        for (let i = 0; i < n; i++) {
          const scores = new Float64Array(n);
          for (let j = 0; j < n; j++) {
            let dot = 0;
            for (let t = 0; t < dHead; t++) dot += q[i * dHead + t] * k[j * dHead + t];
            scores[j] = dot * invSqrt;
          }
          const { probs, logProbs } = softmaxRow(scores);
          probsRows.push(probs);
          logRows.push(logProbs);
          // attention-weighted value mix feeds the next layer
          for (let t = 0; t < dHead; t++) {
            let acc = 0;
            for (let j = 0; j < n; j++) acc += probs[j] * v[j * dHead + t];
            mixed[i * heads * dHead + h * dHead + t] = acc;
          }
        }
        maps.push({ layer: l, head: h, probs: probsRows, logProbs: logRows });
      }
      const projected = matmul(mixed, n, heads * dHead, this.layers[l].wo, dModel);
      for (let i = 0; i < x.length; i++) x[i] += projected[i];
    }
    return maps;
  }
}
