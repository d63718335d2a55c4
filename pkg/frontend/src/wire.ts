/** Line-delimited JSON protocol shared with the Python resolver. */

export const EDIT_ACTIONS = ['=', '+', '-', 'r', 'p'] as const;
export type EditAction = (typeof EDIT_ACTIONS)[number];

export interface WireRequest {
  id: number;
  a_o: (string | null)[];
  o_a: (string | null)[];
  b_o: (string | null)[];
  o_b: (string | null)[];
  d_ao: EditAction[];
  d_bo: EditAction[];
}

export interface WireResponse {
  id: number | null;
  probs?: number[];
  error?: string;
}

const SEQ_KEYS = ['a_o', 'o_a', 'b_o', 'o_b'] as const;
const EDIT_KEYS = ['d_ao', 'd_bo'] as const;

export function parseRequest(line: string): WireRequest {
  const msg = JSON.parse(line);
  if (typeof msg.id !== 'number') {
    throw new Error('missing id');
  }
  for (const key of SEQ_KEYS) {
    const seq = msg[key];
    if (!Array.isArray(seq)) {
      throw new Error(`missing sequence ${key}`);
    }
    for (const tok of seq) {
      if (tok !== null && typeof tok !== 'string') {
        throw new Error(`bad token in ${key}`);
      }
    }
  }
  for (const key of EDIT_KEYS) {
    const edits = msg[key];
    if (!Array.isArray(edits)) {
      throw new Error(`missing edit sequence ${key}`);
    }
    for (const action of edits) {
      if (!EDIT_ACTIONS.includes(action)) {
        throw new Error(`bad edit action ${JSON.stringify(action)}`);
      }
    }
  }
  if (
    msg.a_o.length !== msg.o_a.length ||
    msg.a_o.length !== msg.d_ao.length ||
    msg.b_o.length !== msg.o_b.length ||
    msg.b_o.length !== msg.d_bo.length
  ) {
    throw new Error('sequence length mismatch');
  }
  return msg as WireRequest;
}

export function serializeResponse(response: WireResponse): string {
  return JSON.stringify(response);
}
