/**
 * Wires the poll loop, state, and renderers to the page.
 *
 * The console polls at 1 Hz and re-renders from scratch on every state
 * change; at desk scale (tens of queries) diffing would buy nothing.
 * The API base defaults to the label service's standard port on the
 * page's host and can be overridden with ?api=http://host:port.
 */

import { ApiClient } from "./api.js";
import {
  classNames,
  ConsoleState,
  expiryCountdown,
  initialState,
  isStale,
  labelFinished,
  labelingDisabled,
  labelStarted,
  oldestFirst,
  pollFailed,
  pollSucceeded,
} from "./model.js";
import { renderBanner, renderQueue, renderStatusBar } from "./ui.js";

const POLL_MS = 1000;

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  if (override) return override;
  return `${window.location.protocol}//${window.location.hostname}:8787`;
}

function requireElement(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id} in index.html`);
  return el;
}

const client = new ApiClient(apiBase());
let state: ConsoleState = initialState();

const statusEl = requireElement("status-bar");
const bannerEl = requireElement("banner");
const queueEl = requireElement("queue");

function render(): void {
  const stale = isStale(state);
  statusEl.innerHTML = renderStatusBar(state.status, stale, state.sessionLabels);
  bannerEl.innerHTML = renderBanner(stale ? state.lastError : null);
  const queries = oldestFirst(state.queries);
  const countdowns = new Map(
    queries.map((q) => [q.id, expiryCountdown(q, state)]),
  );
  queueEl.innerHTML = renderQueue(queries, {
    classes: classNames(state),
    disabled: labelingDisabled(state),
    countdowns,
  });
}

async function poll(): Promise<void> {
  try {
    const [queries, status] = await Promise.all([
      client.getQueries(),
      client.getStatus(),
    ]);
    state = pollSucceeded(state, queries, status);
  } catch (err) {
    state = pollFailed(state, err instanceof Error ? err.message : String(err));
  }
  render();
}

async function onLabelClick(id: number, driftClass: string): Promise<void> {
  if (state.inFlight.has(id)) return;
  state = labelStarted(state, id);
  render();
  try {
    const outcome = await client.submitLabel(id, driftClass);
    state = labelFinished(state, id, outcome);
  } catch (err) {
    // Network failure: the query stays pending; the next poll resyncs.
    state = labelFinished(state, id, {
      kind: "rejected",
      detail: err instanceof Error ? err.message : String(err),
    });
  }
  await poll();
}

queueEl.addEventListener("click", (event) => {
  const target = event.target;
  if (!(target instanceof HTMLButtonElement)) return;
  if (target.dataset.action !== "label" || target.disabled) return;
  const id = Number(target.dataset.id);
  const driftClass = target.dataset.class ?? "";
  void onLabelClick(id, driftClass);
});

void poll();
window.setInterval(() => void poll(), POLL_MS);
