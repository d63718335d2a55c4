/**
 * Wire-protocol server: one JSON request per stdin line, one JSON
 * response per stdout line.  Malformed lines get an error response and
 * the connection stays open.
 */

import * as fs from 'fs';
import * as readline from 'readline';
import { setupBackend } from './backend';
import { fromCheckpoint, MergeClassifier, DEFAULT_CONFIG } from './model';
import { RESERVED, Vocab } from './vocab';
import { parseRequest, serializeResponse } from './wire';

export function handleLine(model: MergeClassifier, line: string): string {
  if (!line.trim()) return '';
  let id: number | null = null;
  try {
    try {
      id = JSON.parse(line).id ?? null;
    } catch {
      id = null;
    }
    const request = parseRequest(line);
    return serializeResponse({
      id: request.id,
      probs: model.predict(request),
    });
  } catch (err) {
    return serializeResponse({
      id,
      error: `malformed request: ${(err as Error).message}`,
    });
  }
}

/** Untrained fallback model so the protocol can be exercised end to end. */
export function randomModel(seed = 1): MergeClassifier {
  return new MergeClassifier(
    { ...DEFAULT_CONFIG, vocabSize: RESERVED.length },
    new Vocab([...RESERVED]),
    seed,
  );
}

async function main() {
  await setupBackend();
  const checkpointPath = process.argv[2];
  const model = checkpointPath
    ? fromCheckpoint(JSON.parse(fs.readFileSync(checkpointPath, 'utf-8')))
    : randomModel();
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on('line', (line) => {
    const reply = handleLine(model, line);
    if (reply) process.stdout.write(reply + '\n');
  });
}

if (require.main === module) {
  main();
}
