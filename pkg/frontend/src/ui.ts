/**
 * HTML renderers for the console.
 *
 * Every renderer is a pure string function of the state passed in, so
 * the whole visual layer is assertable in tests without a browser.
 * Server values are embedded verbatim in title attributes; the visible
 * text only rounds for layout, it never recomputes anything.
 */

import type { QueryDTO, StatusDTO } from "./api.js";

export interface RenderContext {
  /** Label button set, in server class order. */
  classes: string[];
  /** True disables every label button (budget gone, stale, offline). */
  disabled: boolean;
  /** Emissions left per pending query id. */
  countdowns: Map<number, number | null>;
}

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Inline SVG polyline of the window means behind a query. */
export function sparkline(
  values: number[],
  width = 160,
  height = 36,
): string {
  if (values.length === 0) return `<svg class="spark" width="${width}" height="${height}"></svg>`;
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo;
  const pad = 2;
  const points = values
    .map((v, i) => {
      const x = values.length === 1
        ? width / 2
        : pad + (i * (width - 2 * pad)) / (values.length - 1);
      // Flat series draws mid-height instead of dividing by zero.
      const t = span === 0 ? 0.5 : (v - lo) / span;
      const y = height - pad - t * (height - 2 * pad);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  return (
    `<svg class="spark" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" role="img">` +
    `<polyline fill="none" points="${points}"/></svg>`
  );
}

/** One bar per gap; height scales to the largest magnitude in the set. */
export function gapBars(gaps: number[]): string {
  const top = Math.max(1e-12, ...gaps.map((g) => Math.abs(g)));
  const bars = gaps
    .map((g) => {
      const size = Math.round((Math.abs(g) / top) * 100);
      const sign = g < 0 ? "neg" : "pos";
      return (
        `<span class="gap ${sign}" title="${g}" ` +
        `style="height:${Math.max(size, 2)}%"></span>`
      );
    })
    .join("");
  return `<div class="gaps" aria-label="gaps">${bars}</div>`;
}

/** Horizontal bar per class, width = probability. */
export function probBars(probabilities: number[], classes: string[]): string {
  const rows = probabilities
    .map((p, i) => {
      const name = classes[i] ?? `class ${i}`;
      const pct = (p * 100).toFixed(1);
      return (
        `<div class="prob-row"><span class="prob-name">${esc(name)}</span>` +
        `<span class="prob-track"><span class="prob-fill" title="${p}" ` +
        `style="width:${pct}%"></span></span>` +
        `<span class="prob-value">${pct}%</span></div>`
      );
    })
    .join("");
  return `<div class="probs">${rows}</div>`;
}

export function entropyBadge(entropy: number): string {
  return `<span class="badge" title="${entropy}">H = ${entropy.toFixed(3)}</span>`;
}

export function renderCard(query: QueryDTO, ctx: RenderContext): string {
  const settled = query.status !== "pending";
  const classAttr = settled ? `card ${query.status}` : "card";
  const countdown = ctx.countdowns.get(query.id) ?? null;

  let footer: string;
  if (query.status === "answered") {
    footer = `<p class="settled">answered: <strong>${esc(query.answer ?? "")}</strong></p>`;
  } else if (query.status === "expired") {
    footer = `<p class="settled">expired unanswered</p>`;
  } else {
    const buttons = ctx.classes
      .map(
        (c) =>
          `<button type="button" data-action="label" data-id="${query.id}" ` +
          `data-class="${esc(c)}"${ctx.disabled ? " disabled" : ""}>${esc(c)}</button>`,
      )
      .join("");
    const ttl = countdown === null ? "" :
      `<span class="ttl">expires in ${countdown} emissions</span>`;
    footer = `<div class="actions">${buttons}${ttl}</div>`;
  }

  return (
    `<article class="${classAttr}" data-id="${query.id}">` +
    `<header><span class="qid">query #${query.id}</span>` +
    `<span class="pos">@ ${query.issued_at}</span>` +
    `${entropyBadge(query.entropy)}</header>` +
    `<div class="signal">${sparkline(query.window_means)}${gapBars(query.gaps)}</div>` +
    `<p class="predicted">predicted: <strong>${esc(query.predicted)}</strong></p>` +
    probBars(query.probabilities, ctx.classes) +
    footer +
    `</article>`
  );
}

export function renderQueue(queries: QueryDTO[], ctx: RenderContext): string {
  if (queries.length === 0) {
    return `<p class="empty">no pending queries</p>`;
  }
  return queries.map((q) => renderCard(q, ctx)).join("\n");
}

export function renderStatusBar(
  status: StatusDTO | null,
  stale: boolean,
  sessionLabels: number,
): string {
  if (status === null) {
    return `<span class="connecting">connecting to label service…</span>`;
  }
  const prediction = status.last_prediction ?? "–";
  const staleness = stale ? `<span class="stale">stale</span>` : "";
  return (
    `<span>position <strong>${status.position}</strong></span>` +
    `<span>alarms <strong>${status.alarms}</strong></span>` +
    `<span>events <strong>${status.events}</strong></span>` +
    `<span>budget <strong>${status.budget_remaining}/${status.budget}</strong></span>` +
    `<span>last prediction <strong>${esc(prediction)}</strong></span>` +
    `<span>labeled this session <strong>${sessionLabels}</strong></span>` +
    staleness
  );
}

export function renderBanner(message: string | null): string {
  if (message === null) return "";
  return `<div class="banner">label service unreachable: ${esc(message)} (retrying)</div>`;
}
