/**
 * Console state and the pure transitions the UI renders from.
 *
 * Everything here is plain data in, plain data out: the poll loop and
 * click handlers live in main.ts, rendering in ui.ts. Keeping the
 * transitions pure is what makes the console testable without a DOM
 * or a live service.
 */

import type { LabelOutcome, QueryDTO, StatusDTO } from "./api.js";

/** Polls that must fail in a row before the display is marked stale. */
export const STALE_AFTER_MISSED = 3;

export interface ConsoleState {
  queries: QueryDTO[];
  status: StatusDTO | null;
  /** Consecutive failed polls since the last good one. */
  missedPolls: number;
  /** True once any poll has succeeded; gates "connecting" vs "stale". */
  connectedOnce: boolean;
  /** Labels accepted by the server during this session. */
  sessionLabels: number;
  /** Query ids with a label POST still in flight. */
  inFlight: ReadonlySet<number>;
  lastError: string | null;
}

export function initialState(): ConsoleState {
  return {
    queries: [],
    status: null,
    missedPolls: 0,
    connectedOnce: false,
    sessionLabels: 0,
    inFlight: new Set(),
    lastError: null,
  };
}

export function pollSucceeded(
  state: ConsoleState,
  queries: QueryDTO[],
  status: StatusDTO,
): ConsoleState {
  return {
    ...state,
    queries,
    status,
    missedPolls: 0,
    connectedOnce: true,
    lastError: null,
  };
}

export function pollFailed(state: ConsoleState, message: string): ConsoleState {
  return { ...state, missedPolls: state.missedPolls + 1, lastError: message };
}

export function labelStarted(state: ConsoleState, id: number): ConsoleState {
  const inFlight = new Set(state.inFlight);
  inFlight.add(id);
  return { ...state, inFlight };
}

export function labelFinished(
  state: ConsoleState,
  id: number,
  outcome: LabelOutcome,
): ConsoleState {
  const inFlight = new Set(state.inFlight);
  inFlight.delete(id);
  return {
    ...state,
    inFlight,
    sessionLabels: state.sessionLabels + (outcome.kind === "accepted" ? 1 : 0),
  };
}

/** Stale: we were connected but the last STALE_AFTER_MISSED polls failed. */
export function isStale(state: ConsoleState): boolean {
  return state.connectedOnce && state.missedPolls >= STALE_AFTER_MISSED;
}

/** Ids issue sequentially, so id order is issue order. */
export function oldestFirst(queries: QueryDTO[]): QueryDTO[] {
  return [...queries].sort((a, b) => a.id - b.id);
}

/**
 * Labeling stops globally when the budget is gone, the display is
 * stale, or we have never reached the service.
 */
export function labelingDisabled(state: ConsoleState): boolean {
  if (state.status === null || isStale(state)) return true;
  return state.status.budget_remaining <= 0;
}

/** Button set: the server's class order, verbatim. */
export function classNames(state: ConsoleState): string[] {
  return state.status === null ? [] : Object.keys(state.status.class_counts);
}

/**
 * Emissions left before the loop expires this query; null when the
 * query is not pending or no status snapshot exists yet.
 */
export function expiryCountdown(
  query: QueryDTO,
  state: ConsoleState,
): number | null {
  if (query.status !== "pending" || state.status === null) return null;
  const age = state.status.emissions - query.issued_emission;
  return Math.max(0, state.status.expire_after - age);
}
