/**
 * Feature building for training from the miner's JSONL records.
 *
 * The dataset stores raw region text, so alignment is recomputed here:
 * lexical tokenization, longest-common-subsequence pairing, and fusion
 * of paired delete/insert runs into replacements.  Serving does not use
 * this module; requests arrive pre-aligned on the wire.
 */

import { EditAction } from './wire';

const TOKEN_RE =
  /\r\n|\n|\r|[^\S\r\n]+|"(?:\\[^\r\n]|[^"\\\r\n])*"|'(?:\\[^\r\n]|[^'\\\r\n])*'|`(?:\\[^\r\n]|[^`\\\r\n])*`|\d[\w.]*|[A-Za-z_$][\w$]*|[^\s\w]/g;

export function tokenizeCode(text: string): string[] {
  return text.match(TOKEN_RE) ?? [];
}

export interface AlignedPair {
  upper: (string | null)[];
  lower: (string | null)[];
  edits: EditAction[];
}

/** LCS table over the two token sequences. */
function lcsTable(changed: string[], base: string[]): Int32Array {
  const w = base.length + 1;
  const table = new Int32Array((changed.length + 1) * w);
  for (let i = changed.length - 1; i >= 0; i--) {
    for (let j = base.length - 1; j >= 0; j--) {
      table[i * w + j] =
        changed[i] === base[j]
          ? table[(i + 1) * w + j + 1] + 1
          : Math.max(table[(i + 1) * w + j], table[i * w + j + 1]);
    }
  }
  return table;
}

export function align(changed: string[], base: string[]): AlignedPair {
  const w = base.length + 1;
  const table = lcsTable(changed, base);
  const upper: (string | null)[] = [];
  const lower: (string | null)[] = [];
  const edits: EditAction[] = [];

  let deletes: string[] = [];
  let inserts: string[] = [];
  const flush = () => {
    // Paired delete/insert positions fuse into replacements.
    const fused = Math.min(deletes.length, inserts.length);
    for (let k = 0; k < fused; k++) {
      upper.push(inserts[k]);
      lower.push(deletes[k]);
      edits.push('r');
    }
    for (let k = fused; k < deletes.length; k++) {
      upper.push(null);
      lower.push(deletes[k]);
      edits.push('-');
    }
    for (let k = fused; k < inserts.length; k++) {
      upper.push(inserts[k]);
      lower.push(null);
      edits.push('+');
    }
    deletes = [];
    inserts = [];
  };

  let i = 0;
  let j = 0;
  while (i < changed.length || j < base.length) {
    if (i < changed.length && j < base.length && changed[i] === base[j]) {
      flush();
      upper.push(changed[i]);
      lower.push(base[j]);
      edits.push('=');
      i++;
      j++;
    } else if (
      j < base.length &&
      (i === changed.length || table[i * w + j + 1] >= table[(i + 1) * w + j])
    ) {
      deletes.push(base[j]);
      j++;
    } else {
      inserts.push(changed[i]);
      i++;
    }
  }
  flush();
  return { upper, lower, edits };
}

export interface DatasetRecord {
  a: string;
  b: string;
  o: string;
  label: number;
  split?: string;
  [extra: string]: unknown;
}

export interface Example {
  a_o: (string | null)[];
  o_a: (string | null)[];
  b_o: (string | null)[];
  o_b: (string | null)[];
  d_ao: EditAction[];
  d_bo: EditAction[];
  /** Class index 0..8 (label ordinal minus one). */
  target: number;
}

export function buildExample(record: DatasetRecord): Example {
  const o = tokenizeCode(record.o);
  const pairA = align(tokenizeCode(record.a), o);
  const pairB = align(tokenizeCode(record.b), o);
  return {
    a_o: pairA.upper,
    o_a: pairA.lower,
    b_o: pairB.upper,
    o_b: pairB.lower,
    d_ao: pairA.edits,
    d_bo: pairB.edits,
    target: record.label - 1,
  };
}

export function loadJsonl(text: string): DatasetRecord[] {
  const records: DatasetRecord[] = [];
  for (const line of text.split('\n')) {
    if (!line.trim()) continue;
    const record = JSON.parse(line);
    if (typeof record.label === 'number') {
      records.push(record);
    }
  }
  return records;
}
