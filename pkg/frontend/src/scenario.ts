/** Scenario state: an editable future P-level trajectory with undo, pinned
 * comparison overlays, and a replayable event log. Every mutation goes
 * through apply() so the whole UI state is reproducible from the log. */

import { HORIZON, LEVEL_MAX, LEVEL_MIN, WhatIfResponse } from "./types";

export interface PinnedScenario {
  label: string;
  future_pl: number[];
  response: WhatIfResponse;
}

export interface ScenarioDraft {
  sampleId: number | null;
  futurePl: number[];
  lastResponse: WhatIfResponse | null;
  undoStack: number[][];
  pinned: PinnedScenario[];
  eventLog: ScenarioEvent[];
}

export type ScenarioEvent =
  | { kind: "load"; sampleId: number; level: number }
  | { kind: "edit"; from: number; to: number; level: number }
  | { kind: "undo" }
  | { kind: "pin"; label: string }
  | { kind: "response"; response: WhatIfResponse };

export const MAX_PINS = 4;

export function newDraft(): ScenarioDraft {
  return {
    sampleId: null,
    futurePl: new Array(HORIZON).fill(5),
    lastResponse: null,
    undoStack: [],
    pinned: [],
    eventLog: [],
  };
}

export function validTrajectory(pl: number[]): boolean {
  return (
    pl.length === HORIZON &&
    pl.every((p) => Number.isInteger(p) && p >= LEVEL_MIN && p <= LEVEL_MAX)
  );
}

/** Apply one event, returning the next draft; invalid edits are rejected
 * (the draft is returned unchanged) so the trajectory can never leave the
 * request invariants. */
export function apply(draft: ScenarioDraft, event: ScenarioEvent): ScenarioDraft {
  switch (event.kind) {
    case "load": {
      return {
        ...newDraft(),
        sampleId: event.sampleId,
        futurePl: new Array(HORIZON).fill(clampLevel(event.level)),
        eventLog: [...draft.eventLog, event],
      };
    }
    case "edit": {
      const { from, to, level } = event;
      if (
        !Number.isInteger(level) || level < LEVEL_MIN || level > LEVEL_MAX ||
        from < 0 || to > HORIZON - 1 || from > to
      ) {
        return draft; // rejected inline
      }
      const next = draft.futurePl.slice();
      for (let i = from; i <= to; i++) next[i] = level;
      return {
        ...draft,
        futurePl: next,
        undoStack: [...draft.undoStack, draft.futurePl],
        eventLog: [...draft.eventLog, event],
      };
    }
    case "undo": {
      if (draft.undoStack.length === 0) return draft;
      const stack = draft.undoStack.slice();
      const prev = stack.pop() as number[];
      return {
        ...draft,
        futurePl: prev,
        undoStack: stack,
        eventLog: [...draft.eventLog, event],
      };
    }
    case "pin": {
      if (draft.lastResponse === null || draft.pinned.length >= MAX_PINS) {
        return draft;
      }
      const pin: PinnedScenario = {
        label: event.label,
        future_pl: draft.futurePl.slice(),
        response: draft.lastResponse,
      };
      return {
        ...draft,
        pinned: [...draft.pinned, pin],
        eventLog: [...draft.eventLog, event],
      };
    }
    case "response": {
      return {
        ...draft,
        lastResponse: event.response,
        eventLog: [...draft.eventLog, event],
      };
    }
  }
}

/** Rebuild a draft purely from its event log. */
export function replay(events: ScenarioEvent[]): ScenarioDraft {
  let draft = newDraft();
  for (const ev of events) draft = apply(draft, ev);
  return draft;
}

function clampLevel(level: number): number {
  return Math.min(LEVEL_MAX, Math.max(LEVEL_MIN, Math.round(level)));
}

/** Piecewise-constant segments of a trajectory: [startStep, endStep, level]. */
export function segments(pl: number[]): Array<[number, number, number]> {
  const out: Array<[number, number, number]> = [];
  let start = 0;
  for (let i = 1; i <= pl.length; i++) {
    if (i === pl.length || pl[i] !== pl[start]) {
      out.push([start, i - 1, pl[start]]);
      start = i;
    }
  }
  return out;
}
