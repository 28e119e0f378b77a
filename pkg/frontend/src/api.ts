/**
 * Typed client for the label service HTTP API.
 *
 * This is the console's only connection to the detector: everything
 * displayed comes from these three endpoints, and the single label POST
 * is the only write. Values are passed through untouched; the client
 * never recomputes probabilities or entropy.
 */

export interface QueryDTO {
  id: number;
  gaps: number[];
  window_means: number[];
  probabilities: number[];
  predicted: string;
  entropy: number;
  issued_at: number;
  issued_emission: number;
  status: "pending" | "answered" | "expired";
  answer: string | null;
}

export interface StatusDTO {
  position: number;
  emissions: number;
  alarms: number;
  events: number;
  budget: number;
  budget_spent: number;
  budget_remaining: number;
  expire_after: number;
  pending_queries: number;
  class_counts: Record<string, number>;
  window_means: number[];
  last_prediction: string | null;
  last_probabilities: number[] | null;
}

/**
 * How a label POST resolved. "conflict" is a lost race (someone else
 * answered first, or the query expired); "rejected" is a caller bug
 * (unknown id or class). Network failures throw instead.
 */
export type LabelOutcome =
  | { kind: "accepted" }
  | { kind: "conflict"; detail: string }
  | { kind: "rejected"; detail: string };

export type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  readonly baseUrl: string;
  private readonly fetchFn: FetchFn;

  constructor(baseUrl: string, fetchFn?: FetchFn) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    // Arrow wrapper keeps the global fetch bound to its realm.
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  async getQueries(status?: QueryDTO["status"]): Promise<QueryDTO[]> {
    const suffix = status === undefined ? "" : `?status=${status}`;
    return this.getJson<QueryDTO[]>(`/api/queries${suffix}`);
  }

  async getStatus(): Promise<StatusDTO> {
    return this.getJson<StatusDTO>("/api/status");
  }

  async submitLabel(id: number, driftClass: string): Promise<LabelOutcome> {
    const res = await this.fetchFn(`${this.baseUrl}/api/queries/${id}/label`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ class: driftClass }),
    });
    if (res.status === 204) return { kind: "accepted" };
    const detail = await detailOf(res);
    if (res.status === 409) return { kind: "conflict", detail };
    if (res.status === 404 || res.status === 422) {
      return { kind: "rejected", detail };
    }
    throw new Error(`label POST failed: HTTP ${res.status} ${detail}`);
  }

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path);
    if (!res.ok) throw new Error(`GET ${path} failed: HTTP ${res.status}`);
    return (await res.json()) as T;
  }
}

async function detailOf(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return "";
  }
}
