/** Training loops: supervised classification and toy masked-token pretraining. */

import * as fs from 'fs';
import * as tf from '@tensorflow/tfjs';
import { setupBackend } from './backend';
import { buildExample, Example, loadJsonl, tokenizeCode } from './features';
import {
  Batch,
  Checkpoint,
  DEFAULT_CONFIG,
  disposeBatch,
  MergeClassifier,
  toCheckpoint,
} from './model';
import { MASK_ID, PAD_ID, Vocab } from './vocab';

/** Deterministic PRNG so runs are reproducible for a fixed seed. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) | 0;
    let t = Math.imul(state ^ (state >>> 15), 1 | state);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function shuffled<T>(items: T[], rand: () => number): T[] {
  const out = items.slice();
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [out[i], out[j]] = [out[j], out[i]];
  }
  return out;
}

export interface EpochStats {
  epoch: number;
  loss: number;
  valAccuracy?: number;
  valFScore?: number;
}

export interface TrainOptions {
  epochs: number;
  batchSize: number;
  learningRate: number;
  seed: number;
  freeze?: Set<string>;
  validation?: Example[];
  onEpoch?: (stats: EpochStats) => void;
}

export const TRAIN_DEFAULTS: TrainOptions = {
  epochs: 10,
  batchSize: 32,
  learningRate: 3e-3,
  seed: 17,
};

export function accuracy(model: MergeClassifier, examples: Example[]): number {
  if (!examples.length) return 0;
  const predicted = model.predictBatchClasses(examples);
  let hits = 0;
  predicted.forEach((cls, i) => {
    if (cls === examples[i].target) hits++;
  });
  return hits / examples.length;
}

/** Macro-averaged F-score over the classes present in the reference. */
export function macroFScore(model: MergeClassifier, examples: Example[]): number {
  const predicted = model.predictBatchClasses(examples);
  const classes = new Set(examples.map((e) => e.target));
  let total = 0;
  for (const cls of classes) {
    let tp = 0;
    let fp = 0;
    let fn = 0;
    predicted.forEach((p, i) => {
      const truth = examples[i].target;
      if (p === cls && truth === cls) tp++;
      else if (p === cls) fp++;
      else if (truth === cls) fn++;
    });
    const precision = tp + fp ? tp / (tp + fp) : 0;
    const recall = tp + fn ? tp / (tp + fn) : 0;
    total += precision + recall ? (2 * precision * recall) / (precision + recall) : 0;
  }
  return total / classes.size;
}

export function trainClassifier(
  model: MergeClassifier,
  examples: Example[],
  options: Partial<TrainOptions> = {},
): EpochStats[] {
  const opts = { ...TRAIN_DEFAULTS, ...options };
  if (!examples.length) {
    throw new Error('no labeled examples to train on');
  }
  const optimizer = tf.train.adam(opts.learningRate);
  const varList = model.trainableVars(opts.freeze);
  const rand = mulberry32(opts.seed);
  const history: EpochStats[] = [];

  for (let epoch = 1; epoch <= opts.epochs; epoch++) {
    const order = shuffled(examples, rand);
    let lossSum = 0;
    let batches = 0;
    for (let start = 0; start < order.length; start += opts.batchSize) {
      const slice = order.slice(start, start + opts.batchSize);
      const targets = slice.map((e) => e.target);
      let batch: Batch | null = null;
      const lossValue = optimizer.minimize(
        () => {
          batch = model.makeBatch(slice);
          return model.loss(batch, targets);
        },
        true,
        varList,
      );
      if (batch) disposeBatch(batch);
      lossSum += lossValue!.dataSync()[0];
      lossValue!.dispose();
      batches++;
    }
    const stats: EpochStats = { epoch, loss: lossSum / batches };
    if (opts.validation) {
      stats.valAccuracy = accuracy(model, opts.validation);
      stats.valFScore = macroFScore(model, opts.validation);
    }
    opts.onEpoch?.(stats);
    history.push(stats);
  }
  optimizer.dispose();
  return history;
}

export interface PretrainOptions {
  epochs: number;
  batchSize: number;
  learningRate: number;
  maskProb: number;
  seed: number;
}

export const PRETRAIN_DEFAULTS: PretrainOptions = {
  epochs: 3,
  batchSize: 32,
  learningRate: 3e-3,
  maskProb: 0.15,
  seed: 29,
};

/**
 * Masked-token pretraining over raw token sequences; tokens are masked
 * uniformly at random and reconstructed from the encoder states.
 * Returns the mean loss per epoch.
 */
export function mlmPretrain(
  model: MergeClassifier,
  sequences: string[][],
  options: Partial<PretrainOptions> = {},
): number[] {
  const opts = { ...PRETRAIN_DEFAULTS, ...options };
  const optimizer = tf.train.adam(opts.learningRate);
  const varList = model.trainableVars(new Set(['aggregation', 'head']));
  const rand = mulberry32(opts.seed);
  const limit = model.config.maxPositions;
  const losses: number[] = [];

  for (let epoch = 1; epoch <= opts.epochs; epoch++) {
    const order = shuffled(sequences, rand);
    let lossSum = 0;
    let batches = 0;
    for (let start = 0; start < order.length; start += opts.batchSize) {
      const slice = order.slice(start, start + opts.batchSize);
      const length = Math.min(
        limit,
        Math.max(...slice.map((s) => s.length), 1),
      );
      const masked: number[][] = [];
      const original: number[][] = [];
      const lossMask: number[][] = [];
      const attnMask: number[][] = [];
      for (const seq of slice) {
        const ids = model.vocab.encode(seq.slice(0, length));
        while (ids.length < length) ids.push(PAD_ID);
        const row = ids.slice();
        const lm = ids.map(() => 0);
        ids.forEach((id, i) => {
          if (id !== PAD_ID && rand() < opts.maskProb) {
            row[i] = MASK_ID;
            lm[i] = 1;
          }
        });
        masked.push(row);
        original.push(ids);
        lossMask.push(lm);
        attnMask.push(ids.map((id) => (id === PAD_ID ? 0 : 1)));
      }
      const lossValue = optimizer.minimize(
        () =>
          model.mlmLoss(
            tf.tensor2d(masked, undefined, 'int32'),
            tf.tensor2d(original, undefined, 'int32'),
            tf.tensor2d(lossMask, undefined, 'float32'),
            tf.tensor2d(
              masked.map((r) => r.map(() => 0)),
              undefined,
              'int32',
            ),
            tf.tensor2d(attnMask, undefined, 'float32'),
          ),
        true,
        varList,
      );
      lossSum += lossValue!.dataSync()[0];
      lossValue!.dispose();
      batches++;
    }
    losses.push(lossSum / batches);
  }
  optimizer.dispose();
  return losses;
}

export function examplesFromJsonl(text: string): {
  train: Example[];
  test: Example[];
  vocab: Vocab;
} {
  const records = loadJsonl(text).filter((r) => r.label >= 1 && r.label <= 9);
  const tokens: string[] = [];
  for (const r of records) {
    tokens.push(
      ...tokenizeCode(r.a),
      ...tokenizeCode(r.b),
      ...tokenizeCode(r.o),
    );
  }
  const vocab = Vocab.build(tokens);
  const train: Example[] = [];
  const test: Example[] = [];
  for (const r of records) {
    (r.split === 'test' ? test : train).push(buildExample(r));
  }
  return { train, test, vocab };
}

async function main() {
  const [dataset, out] = process.argv.slice(2);
  if (!dataset || !out) {
    console.error('usage: node dist/train.js <dataset.jsonl> <checkpoint.json>'
      + ' [--epochs N] [--pretrain] [--freeze-encoder]');
    process.exit(1);
  }
  await setupBackend();
  const flags = process.argv.slice(4);
  const epochs = flags.includes('--epochs')
    ? parseInt(flags[flags.indexOf('--epochs') + 1], 10)
    : TRAIN_DEFAULTS.epochs;

  const { train, test, vocab } = examplesFromJsonl(
    fs.readFileSync(dataset, 'utf-8'),
  );
  const model = new MergeClassifier(
    { ...DEFAULT_CONFIG, vocabSize: vocab.size },
    vocab,
  );
  if (flags.includes('--pretrain')) {
    const sequences = train.map((e) =>
      e.o_a.filter((t): t is string => t !== null),
    );
    const losses = mlmPretrain(model, sequences);
    console.error(`pretraining loss per epoch: ${losses.map((l) => l.toFixed(3)).join(' ')}`);
  }
  const freeze = flags.includes('--freeze-encoder')
    ? new Set(['encoder'])
    : undefined;
  trainClassifier(model, train, {
    epochs,
    freeze,
    validation: test.length ? test : undefined,
    onEpoch: (stats) => {
      const val =
        stats.valAccuracy === undefined
          ? ''
          : `  val acc ${stats.valAccuracy.toFixed(3)} F ${stats.valFScore!.toFixed(3)}`;
      console.error(`epoch ${stats.epoch}  loss ${stats.loss.toFixed(4)}${val}`);
    },
  });
  const checkpoint: Checkpoint = toCheckpoint(model);
  fs.writeFileSync(out, JSON.stringify(checkpoint));
  console.error(`checkpoint written to ${out}`);
}

if (require.main === module) {
  main();
}
