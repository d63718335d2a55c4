/**
 * Toy four-input transformer classifier over aligned merge regions.
 *
 * Each of the four token sequences is embedded as the sum of token,
 * position and edit-type embeddings, run through one shared encoder,
 * mean-pooled, combined as a learned weighted sum, and projected onto
 * the nine resolution classes.
 */

import * as tf from '@tensorflow/tfjs';
import { Example } from './features';
import { MASK_ID, PAD_ID, Vocab } from './vocab';
import { EDIT_ACTIONS, EditAction, WireRequest } from './wire';

export const N_CLASSES = 9;
export const N_EDIT_TYPES = EDIT_ACTIONS.length; // =, +, -, r, p

export interface ModelConfig {
  vocabSize: number;
  hidden: number;
  layers: number;
  heads: number;
  ffnMult: number;
  maxPositions: number;
  initStd: number;
}

export const DEFAULT_CONFIG: Omit<ModelConfig, 'vocabSize'> = {
  hidden: 32,
  layers: 2,
  heads: 4,
  ffnMult: 2,
  maxPositions: 64,
  initStd: 0.08,
};

const PAD_ACTION_ID = EDIT_ACTIONS.indexOf('p');

/** Smooth feed-forward activation (tanh approximation of gelu). */
function gelu(x: tf.Tensor): tf.Tensor {
  const c = Math.sqrt(2 / Math.PI);
  const inner = tf.mul(c, tf.add(x, tf.mul(0.044715, tf.mul(x, tf.mul(x, x)))));
  return tf.mul(tf.mul(0.5, x), tf.add(1, tf.tanh(inner)));
}

function editId(action: EditAction): number {
  return EDIT_ACTIONS.indexOf(action);
}

/** Keep the middle window when a sequence exceeds the position table. */
function centerWindow<T>(seq: T[], limit: number): T[] {
  if (seq.length <= limit) return seq;
  const start = Math.floor((seq.length - limit) / 2);
  return seq.slice(start, start + limit);
}

interface PaddedPair {
  tok: number[];
  edit: number[];
  mask: number[];
}

export interface Batch {
  /** The four aligned sequences stacked along the batch axis: [4B, S]. */
  tok: tf.Tensor2D;
  edit: tf.Tensor2D;
  mask: tf.Tensor2D;
  size: number;
}

export class MergeClassifier {
  readonly config: ModelConfig;
  readonly vocab: Vocab;
  readonly vars: Record<string, tf.Variable> = {};

  constructor(config: ModelConfig, vocab: Vocab, seed = 1) {
    if (config.hidden % config.heads !== 0) {
      throw new Error('hidden size must divide evenly across heads');
    }
    this.config = config;
    this.vocab = vocab;
    let n = seed;
    const rand = (shape: number[], std = config.initStd) =>
      tf.variable(tf.randomNormal(shape, 0, std, 'float32', n++));
    const fill = (shape: number[], value: number) =>
      tf.variable(tf.fill(shape, value));

    const h = config.hidden;
    this.vars['tokEmb'] = rand([config.vocabSize, h]);
    this.vars['posEmb'] = rand([config.maxPositions, h]);
    this.vars['editEmb'] = rand([N_EDIT_TYPES, h]);
    for (let i = 0; i < config.layers; i++) {
      const p = `layer${i}.`;
      for (const w of ['wq', 'wk', 'wv', 'wo']) {
        this.vars[p + w] = rand([h, h]);
      }
      this.vars[p + 'w1'] = rand([h, h * config.ffnMult]);
      this.vars[p + 'b1'] = fill([h * config.ffnMult], 0);
      this.vars[p + 'w2'] = rand([h * config.ffnMult, h]);
      this.vars[p + 'b2'] = fill([h], 0);
      this.vars[p + 'ln1g'] = fill([h], 1);
      this.vars[p + 'ln1b'] = fill([h], 0);
      this.vars[p + 'ln2g'] = fill([h], 1);
      this.vars[p + 'ln2b'] = fill([h], 0);
    }
    // One aggregation weight per input sequence.
    this.vars['theta'] = fill([4], 0.25);
    this.vars['wOut'] = rand([h, N_CLASSES]);
    this.vars['bOut'] = fill([N_CLASSES], 0);
  }

  /** Variables to optimize; groups in `freeze` stay fixed. */
  trainableVars(freeze: Set<string> = new Set()): tf.Variable[] {
    const group = (name: string) => {
      if (name.startsWith('layer')) return 'encoder';
      if (name.endsWith('Emb')) return 'embeddings';
      if (name === 'theta') return 'aggregation';
      return 'head';
    };
    return Object.entries(this.vars)
      .filter(([name]) => !freeze.has(group(name)))
      .map(([, v]) => v);
  }

  /** 3D-by-2D matmul via flattening; tfjs lacks this gradient. */
  private project(
    x: tf.Tensor3D,
    w: tf.Variable | tf.Tensor,
    transposeB = false,
  ): tf.Tensor3D {
    const [b, s, h] = x.shape;
    const flat = tf.matMul(
      x.reshape([b * s, h]),
      w as tf.Tensor2D,
      false,
      transposeB,
    );
    return flat.reshape([b, s, flat.shape[1] as number]) as tf.Tensor3D;
  }

  private layerNorm(x: tf.Tensor, gain: tf.Variable, bias: tf.Variable) {
    const { mean, variance } = tf.moments(x, -1, true);
    return tf.add(
      tf.mul(tf.div(tf.sub(x, mean), tf.sqrt(tf.add(variance, 1e-5))), gain),
      bias,
    );
  }

  /** Shared encoder: [B, S] ids to [B, S, H] states. */
  encodeSeq(tok: tf.Tensor2D, edit: tf.Tensor2D, mask: tf.Tensor2D): tf.Tensor3D {
    const { hidden, heads, layers } = this.config;
    const dh = hidden / heads;
    const [b, s] = tok.shape;
    // Embedding lookups as one-hot matmuls: gather has no gradient
    // kernel on the wasm backend, and the toy vocab keeps this cheap.
    const tokVec = this.project(
      tf.oneHot(tok, this.config.vocabSize).toFloat() as tf.Tensor3D,
      this.vars['tokEmb'],
    );
    const editVec = this.project(
      tf.oneHot(edit, N_EDIT_TYPES).toFloat() as tf.Tensor3D,
      this.vars['editEmb'],
    );
    const pos = this.vars['posEmb'].slice([0, 0], [s, hidden]);
    let x: tf.Tensor3D = tf.add(tf.add(tokVec, pos), editVec) as tf.Tensor3D;

    const negMask = tf.mul(tf.sub(mask, 1), 1e9).reshape([b, 1, 1, s]);
    const split = (t: tf.Tensor3D) =>
      t.reshape([b, s, heads, dh]).transpose([0, 2, 1, 3]);
    for (let i = 0; i < layers; i++) {
      const p = `layer${i}.`;
      const q = split(this.project(x, this.vars[p + 'wq']));
      const k = split(this.project(x, this.vars[p + 'wk']));
      const v = split(this.project(x, this.vars[p + 'wv']));
      const scores = tf.add(
        tf.div(tf.matMul(q, k, false, true), Math.sqrt(dh)),
        negMask,
      );
      const context = tf
        .matMul(tf.softmax(scores), v)
        .transpose([0, 2, 1, 3])
        .reshape([b, s, hidden]);
      const attended = this.project(context as tf.Tensor3D, this.vars[p + 'wo']);
      x = this.layerNorm(
        tf.add(x, attended),
        this.vars[p + 'ln1g'] as tf.Variable,
        this.vars[p + 'ln1b'] as tf.Variable,
      ) as tf.Tensor3D;
      const ffn = tf.add(
        this.project(
          gelu(
            tf.add(this.project(x, this.vars[p + 'w1']), this.vars[p + 'b1']),
          ) as tf.Tensor3D,
          this.vars[p + 'w2'],
        ),
        this.vars[p + 'b2'],
      );
      x = this.layerNorm(
        tf.add(x, ffn),
        this.vars[p + 'ln2g'] as tf.Variable,
        this.vars[p + 'ln2b'] as tf.Variable,
      ) as tf.Tensor3D;
    }
    return x;
  }

  /** Masked mean pooling to one vector per sequence. */
  private pool(states: tf.Tensor3D, mask: tf.Tensor2D): tf.Tensor2D {
    const expanded = mask.expandDims(-1);
    const summed = tf.sum(tf.mul(states, expanded), 1);
    const counts = tf.maximum(tf.sum(mask, 1, true), 1);
    return tf.div(summed, counts) as tf.Tensor2D;
  }

  logits(batch: Batch): tf.Tensor2D {
    // One shared-encoder pass over all four sequences at once, then a
    // theta-weighted sum of the per-sequence pooled vectors.
    const pooled = this.pool(
      this.encodeSeq(batch.tok, batch.edit, batch.mask),
      batch.mask,
    );
    const stacked = pooled.reshape([4, batch.size, this.config.hidden]);
    const weighted = tf.mul(stacked, this.vars['theta'].reshape([4, 1, 1]));
    const combined = tf.sum(weighted, 0) as tf.Tensor2D;
    return tf.add(
      tf.matMul(combined, this.vars['wOut']),
      this.vars['bOut'],
    ) as tf.Tensor2D;
  }

  loss(batch: Batch, targets: number[]): tf.Scalar {
    const oneHot = tf.oneHot(tf.tensor1d(targets, 'int32'), N_CLASSES);
    return tf.losses.softmaxCrossEntropy(oneHot, this.logits(batch)) as tf.Scalar;
  }

  private padPair(
    tokens: (string | null)[],
    edits: EditAction[],
    length: number,
  ): PaddedPair {
    const limit = this.config.maxPositions;
    const toks = centerWindow(tokens, limit);
    const eds = centerWindow(edits, limit);
    const tok: number[] = [];
    const edit: number[] = [];
    const mask: number[] = [];
    for (let i = 0; i < length; i++) {
      if (i < toks.length) {
        tok.push(this.vocab.id(toks[i]));
        edit.push(editId(eds[i]));
        mask.push(1);
      } else {
        tok.push(PAD_ID);
        edit.push(PAD_ACTION_ID);
        mask.push(0);
      }
    }
    return { tok, edit, mask };
  }

  /** Tensor batch from wire-shaped examples; caller disposes. */
  makeBatch(examples: (Example | WireRequest)[]): Batch {
    const seqs: [
      keyof Example & keyof WireRequest,
      keyof Example & keyof WireRequest,
    ][] = [
      ['a_o', 'd_ao'],
      ['o_a', 'd_ao'],
      ['b_o', 'd_bo'],
      ['o_b', 'd_bo'],
    ];
    const limit = this.config.maxPositions;
    const length = Math.max(
      1,
      ...examples.flatMap((e) =>
        seqs.map(([key]) => Math.min((e[key] as unknown[]).length, limit)),
      ),
    );
    const tok: number[][] = [];
    const edit: number[][] = [];
    const mask: number[][] = [];
    for (const [tokKey, editKey] of seqs) {
      for (const e of examples) {
        const row = this.padPair(
          e[tokKey] as (string | null)[],
          e[editKey] as EditAction[],
          length,
        );
        tok.push(row.tok);
        edit.push(row.edit);
        mask.push(row.mask);
      }
    }
    return {
      tok: tf.tensor2d(tok, undefined, 'int32'),
      edit: tf.tensor2d(edit, undefined, 'int32'),
      mask: tf.tensor2d(mask, undefined, 'float32'),
      size: examples.length,
    };
  }

  /** Probability vector over the nine classes for one request. */
  predict(request: Example | WireRequest): number[] {
    return tf.tidy(() => {
      const batch = this.makeBatch([request]);
      const probs = tf.softmax(this.logits(batch));
      return Array.from(probs.dataSync());
    });
  }

  predictBatchClasses(examples: Example[]): number[] {
    return tf.tidy(() => {
      const batch = this.makeBatch(examples);
      return Array.from(tf.argMax(this.logits(batch), 1).dataSync());
    });
  }

  /**
   * Masked-token reconstruction loss; the output projection is tied to
   * the token embedding table.
   */
  mlmLoss(
    masked: tf.Tensor2D,
    original: tf.Tensor2D,
    lossMask: tf.Tensor2D,
    edit: tf.Tensor2D,
    attnMask: tf.Tensor2D,
  ): tf.Scalar {
    const states = this.encodeSeq(masked, edit, attnMask);
    const logits = this.project(states, this.vars['tokEmb'], true);
    const oneHot = tf.oneHot(original, this.config.vocabSize);
    const perToken = tf.losses.softmaxCrossEntropy(
      oneHot.reshape([-1, this.config.vocabSize]),
      logits.reshape([-1, this.config.vocabSize]),
      undefined,
      undefined,
      tf.Reduction.NONE,
    );
    const flat = lossMask.reshape([-1]);
    return tf.div(
      tf.sum(tf.mul(perToken, flat)),
      tf.maximum(tf.sum(flat), 1),
    ) as tf.Scalar;
  }

  saveWeights(): Record<string, { shape: number[]; data: number[] }> {
    const out: Record<string, { shape: number[]; data: number[] }> = {};
    for (const [name, variable] of Object.entries(this.vars)) {
      out[name] = {
        shape: variable.shape.slice(),
        data: Array.from(variable.dataSync()),
      };
    }
    return out;
  }

  loadWeights(weights: Record<string, { shape: number[]; data: number[] }>) {
    for (const [name, variable] of Object.entries(this.vars)) {
      const saved = weights[name];
      if (!saved) throw new Error(`checkpoint missing ${name}`);
      variable.assign(tf.tensor(saved.data, saved.shape as any));
    }
  }
}

export interface Checkpoint {
  config: ModelConfig;
  vocab: string[];
  weights: Record<string, { shape: number[]; data: number[] }>;
}

export function toCheckpoint(model: MergeClassifier): Checkpoint {
  return {
    config: model.config,
    vocab: model.vocab.toJSON(),
    weights: model.saveWeights(),
  };
}

export function fromCheckpoint(checkpoint: Checkpoint): MergeClassifier {
  const model = new MergeClassifier(
    checkpoint.config,
    Vocab.fromJSON(checkpoint.vocab),
  );
  model.loadWeights(checkpoint.weights);
  return model;
}

export function disposeBatch(batch: Batch) {
  batch.tok.dispose();
  batch.edit.dispose();
  batch.mask.dispose();
}
