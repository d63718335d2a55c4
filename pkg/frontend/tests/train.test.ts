import { describe, expect, it } from 'vitest';
import { MergeClassifier } from '../src/model';
import {
  accuracy,
  examplesFromJsonl,
  macroFScore,
  mlmPretrain,
  mulberry32,
  shuffled,
  trainClassifier,
} from '../src/train';
import { makeSynthetic, syntheticVocab } from '../src/synthetic';

function freshModel(seed = 1): MergeClassifier {
  const vocab = syntheticVocab();
  return new MergeClassifier(
    {
      vocabSize: vocab.size,
      hidden: 16,
      layers: 2,
      heads: 2,
      ffnMult: 2,
      maxPositions: 16,
      initStd: 0.08,
    },
    vocab,
    seed,
  );
}

describe('mulberry32 / shuffled', () => {
  it('is reproducible and stays in [0, 1)', () => {
    const a = mulberry32(42);
    const b = mulberry32(42);
    for (let i = 0; i < 100; i++) {
      const x = a();
      expect(x).toBe(b());
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThan(1);
    }
  });

  it('shuffles without losing elements', () => {
    const items = Array.from({ length: 20 }, (_, i) => i);
    const mixed = shuffled(items, mulberry32(7));
    expect(mixed).not.toEqual(items);
    expect([...mixed].sort((x, y) => x - y)).toEqual(items);
  });
});

describe('trainClassifier', () => {
  it('overfits a handful of examples to full accuracy', () => {
    const model = freshModel(3);
    const examples = makeSynthetic(10, 5, 8);
    trainClassifier(model, examples, {
      epochs: 40,
      batchSize: 10,
      learningRate: 0.01,
      seed: 11,
    });
    expect(accuracy(model, examples)).toBe(1);
  });

  it('drives the training loss down', () => {
    const model = freshModel(1);
    const history = trainClassifier(model, makeSynthetic(300, 6, 8), {
      epochs: 10,
      learningRate: 0.01,
      seed: 11,
    });
    expect(history.length).toBe(10);
    expect(history[history.length - 1].loss).toBeLessThan(history[0].loss / 2);
  });

  it('is deterministic for fixed seeds', () => {
    const examples = makeSynthetic(30, 7, 8);
    const run = () =>
      trainClassifier(freshModel(9), examples, {
        epochs: 3,
        learningRate: 0.01,
        seed: 13,
      }).map((s) => s.loss);
    expect(run()).toEqual(run());
  });

  it('generalizes on the planted-marker task within ten epochs', () => {
    const model = freshModel(1);
    const train = makeSynthetic(300, 21, 8);
    const validation = makeSynthetic(100, 22, 8);
    const history = trainClassifier(model, train, {
      epochs: 10,
      learningRate: 0.01,
      seed: 17,
      validation,
    });
    const best = Math.max(...history.map((s) => s.valAccuracy ?? 0));
    expect(best).toBeGreaterThanOrEqual(0.9);
    expect(macroFScore(model, validation)).toBeGreaterThanOrEqual(0.85);
  });

  it('leaves frozen variables untouched', () => {
    const model = freshModel(2);
    const before = Array.from(model.vars['layer0.wq'].dataSync());
    const theta = Array.from(model.vars['theta'].dataSync());
    trainClassifier(model, makeSynthetic(20, 8, 8), {
      epochs: 2,
      learningRate: 0.01,
      seed: 3,
      freeze: new Set(['encoder', 'aggregation']),
    });
    expect(Array.from(model.vars['layer0.wq'].dataSync())).toEqual(before);
    expect(Array.from(model.vars['theta'].dataSync())).toEqual(theta);
  });

  it('rejects an empty training set', () => {
    expect(() => trainClassifier(freshModel(), [])).toThrow(/no labeled/);
  });
});

describe('mlmPretrain', () => {
  it('reduces the reconstruction loss and leaves the head usable', () => {
    const model = freshModel(4);
    const sequences = makeSynthetic(120, 31, 10).map((e) =>
      e.o_a.filter((t): t is string => t !== null),
    );
    const losses = mlmPretrain(model, sequences, { epochs: 5 });
    expect(losses.length).toBe(5);
    expect(losses[losses.length - 1]).toBeLessThan(losses[0]);

    // Fine-tune only the head and aggregation on the frozen encoder.
    const examples = makeSynthetic(120, 32, 8);
    trainClassifier(model, examples, {
      epochs: 6,
      learningRate: 0.01,
      seed: 19,
      freeze: new Set(['encoder', 'embeddings']),
    });
    expect(accuracy(model, examples)).toBeGreaterThan(1 / 9);
  });
});

describe('examplesFromJsonl', () => {
  it('splits records and builds a vocabulary from all three versions', () => {
    const lines = [
      { a: 'x = 1', b: 'x = 2', o: 'x = 0', label: 1, split: 'train' },
      { a: 'y += 1', b: 'y += 1', o: 'y', label: 4, split: 'test' },
      { a: 'z', b: 'z', o: 'z', label: 0, split: 'train' },
    ];
    const { train, test, vocab } = examplesFromJsonl(
      lines.map((l) => JSON.stringify(l)).join('\n'),
    );
    expect(train.length).toBe(1);
    expect(test.length).toBe(1);
    expect(train[0].target).toBe(0);
    expect(test[0].target).toBe(3);
    for (const tok of ['x', 'y', '0', '2', '+']) {
      expect(vocab.id(tok)).toBeGreaterThan(2);
    }
  });
});
