import { beforeAll } from 'vitest';
import { setupBackend } from '../src/backend';

beforeAll(async () => {
  await setupBackend();
});
