/**
 * Byte-level tokenizer: UTF-8 bytes are the vocabulary (256 symbols).
 *
 * Dead simple, dependency free, and every document tokenizes to the same
 * ids on every platform. The hash identifies the tokenization scheme in
 * export manifests.
 */

export const VOCAB_SIZE = 256;

const SCHEME = "byte-utf8-v1/256";

export function tokenize(text: string): number[] {
  return Array.from(Buffer.from(text, "utf-8"));
}

/** FNV-1a over the scheme descriptor, hex string. */
export function tokenizerHash(): string {
  let h = 0x811c9dc5;
  for (const byte of Buffer.from(SCHEME, "utf-8")) {
    h ^= byte;
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h.toString(16).padStart(8, "0");
}
