/** Prefer the WASM backend; fall back to the pure-JS CPU backend. */

import * as path from 'path';
import * as tf from '@tensorflow/tfjs';
import { setWasmPaths } from '@tensorflow/tfjs-backend-wasm';

function wasmDir(): string {
  try {
    // Resolved relative to this module when running compiled CJS.
    if (typeof require === 'function') {
      return path.dirname(
        require.resolve('@tensorflow/tfjs-backend-wasm/dist/tf-backend-wasm.js'),
      );
    }
  } catch {
    // fall through
  }
  return path.join(
    process.cwd(),
    'node_modules',
    '@tensorflow',
    'tfjs-backend-wasm',
    'dist',
  );
}

export async function setupBackend(): Promise<string> {
  try {
    setWasmPaths(wasmDir() + path.sep);
    if (await tf.setBackend('wasm')) {
      return tf.getBackend();
    }
  } catch {
    // fall through to the default backend
  }
  await tf.ready();
  return tf.getBackend();
}
