/** In-flight request sequencing: every fetch gets a monotonically
 * increasing sequence number; only the highest-sequence response is allowed
 * to mutate view state, so stale responses from superseded edits are
 * discarded. */

export interface SequencerState {
  nextSeq: number;
  newestIssued: number;
  newestRendered: number;
  rendersCommitted: number;
}

export function newSequencer(): SequencerState {
  return { nextSeq: 1, newestIssued: 0, newestRendered: 0, rendersCommitted: 0 };
}

export function beginRequest(state: SequencerState): { state: SequencerState; seq: number } {
  const seq = state.nextSeq;
  return {
    state: { ...state, nextSeq: seq + 1, newestIssued: seq },
    seq,
  };
}

/** A response may render only when it is the newest issued request and newer
 * than anything already rendered. Returns the next state plus the verdict. */
export function acceptResponse(
  state: SequencerState,
  seq: number,
): { state: SequencerState; render: boolean } {
  const render = seq === state.newestIssued && seq > state.newestRendered;
  if (!render) {
    return { state, render };
  }
  return {
    state: {
      ...state,
      newestRendered: seq,
      rendersCommitted: state.rendersCommitted + 1,
    },
    render,
  };
}
