/**
 * Seeded deterministic random numbers for weight generation.
 *
 * mulberry32 for uniforms, Box-Muller on top for gaussians. Quality is more
 * than enough for initializing a toy model, and every draw is a pure
 * function of the seed, so exports are reproducible byte for byte.
 */

export class Rng {
  private state: number;

  constructor(seed: number) {
    this.state = seed >>> 0;
  }

  /** Uniform in [0, 1). */
  next(): number {
    this.state = (this.state + 0x6d2b79f5) >>> 0;
    let t = this.state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  }

  /** Standard normal via Box-Muller (discards the second deviate). */
  gauss(): number {
    let u = this.next();
    while (u === 0) u = this.next();
    const v = this.next();
    return Math.sqrt(-2.0 * Math.log(u)) * Math.cos(2.0 * Math.PI * v);
  }

  /** rows x cols matrix of scaled gaussians, row-major. */
  gaussMatrix(rows: number, cols: number, scale: number): Float64Array {
    const out = new Float64Array(rows * cols);
    for (let i = 0; i < out.length; i++) out[i] = this.gauss() * scale;
    return out;
  }
}
