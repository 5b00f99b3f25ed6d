/**
 * View state and the one piece of model math the client is allowed:
 * re-applying a probability threshold to the raw probability.
 */
import type { AssessmentPayload, WhatIfOverrides } from './types.js';

export interface ViewState {
  runway: string;
  /** ISO timestamp under review; null means "live" (latest available). */
  at: string | null;
  /** Local threshold override in (0, 1); null uses the server default. */
  threshold: number | null;
  overrides: WhatIfOverrides;
  lastPayload: AssessmentPayload | null;
  /** Monotone sequence number of the newest applied response. */
  lastSequence: number;
}

export function initialState(runway: string): ViewState {
  return {
    runway,
    at: null,
    threshold: null,
    overrides: {},
    lastPayload: null,
    lastSequence: -1,
  };
}

/** Switching runways drops overrides so stale edits never leak across panels. */
export function selectRunway(state: ViewState, runway: string): ViewState {
  if (runway === state.runway) return state;
  return { ...initialState(runway), at: state.at, threshold: state.threshold };
}

export function setTimestamp(state: ViewState, at: string | null): ViewState {
  return { ...state, at };
}

export function setThreshold(state: ViewState, threshold: number | null): ViewState {
  if (threshold !== null && !(threshold > 0 && threshold < 1)) {
    throw new Error(`threshold must be inside (0, 1), got ${threshold}`);
  }
  return { ...state, threshold };
}

export function setOverrides(state: ViewState, overrides: WhatIfOverrides): ViewState {
  return { ...state, overrides };
}

/**
 * Apply a fetched payload unless an answer for a newer request already
 * arrived; returns the unchanged state for stale responses.
 */
export function applyPayload(
  state: ViewState,
  payload: AssessmentPayload,
  sequence: number,
): ViewState {
  if (sequence <= state.lastSequence) return state;
  return { ...state, lastPayload: payload, lastSequence: sequence };
}

/**
 * Threshold-slider classification on the payload's raw probability.
 * Matches the server rule exactly: slippery iff probability >= threshold.
 */
export function localIsSlippery(rawProbability: number, threshold: number): boolean {
  return rawProbability >= threshold;
}
