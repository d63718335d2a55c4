/**
 * Synthetic separable dataset: the class is fully determined by a
 * planted marker token inside the changed-side sequence.
 */

import { Example } from './features';
import { Vocab, RESERVED } from './vocab';
import { EditAction } from './wire';
import { mulberry32 } from './train';

export const MARKERS = Array.from({ length: 9 }, (_, i) => `mk${i + 1}`);
const FILLER = Array.from({ length: 24 }, (_, i) => `w${i}`);

export function syntheticVocab(): Vocab {
  return new Vocab([...RESERVED, ...MARKERS, ...FILLER]);
}

export function makeSynthetic(
  count: number,
  seed: number,
  seqLen = 12,
): Example[] {
  const rand = mulberry32(seed);
  const pick = () => FILLER[Math.floor(rand() * FILLER.length)];
  const examples: Example[] = [];
  for (let n = 0; n < count; n++) {
    const target = Math.floor(rand() * 9);
    const base = Array.from({ length: seqLen }, pick);
    const changed = base.slice();
    const slot = Math.floor(rand() * seqLen);
    changed[slot] = MARKERS[target];
    const edits: EditAction[] = base.map((_, i) => (i === slot ? 'r' : '='));
    const other = Array.from({ length: seqLen }, pick);
    const equal: EditAction[] = other.map(() => '=');
    examples.push({
      a_o: changed,
      o_a: base,
      b_o: other,
      o_b: other.slice(),
      d_ao: edits,
      d_bo: equal,
      target,
    });
  }
  return examples;
}
