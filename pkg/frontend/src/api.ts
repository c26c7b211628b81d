/** Thin client for the session-service v1 API.
 *
 * Every non-2xx response carries a machine-readable {code, message, ...}
 * body; it surfaces here as ApiError so views can branch on `code` and
 * show the extras (limit violations, expected/got resume points) inline.
 */

import type { SessionSnapshot, TrajectoryPayload, Violation } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly details: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** Limit-violation payload of a rejected adjustment, [] otherwise. */
  get violations(): Violation[] {
    const v = this.details["violations"];
    return Array.isArray(v) ? (v as Violation[]) : [];
  }
}

export interface StartRequest {
  task: string;
  profile: Record<string, unknown>;
  stage: number;
  seed: number;
  dt?: number;
  n_intervals?: number;
  interval_s?: number;
  rest_s?: number;
  max_adjustments?: number;
  subject_id?: string;
  pace?: number;
}

type FetchFn = (input: RequestInfo | URL, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchFn;

  constructor(
    readonly base: string,
    fetchFn?: FetchFn,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  streamUrl(): string {
    return `${this.base}/v1/stream`;
  }

  /** Current snapshot, or null when no session has been started. */
  async getSession(): Promise<SessionSnapshot | null> {
    try {
      return await this.request<SessionSnapshot>("GET", "/v1/session");
    } catch (err) {
      if (err instanceof ApiError && err.code === "no_session") return null;
      throw err;
    }
  }

  start(req: StartRequest): Promise<SessionSnapshot> {
    return this.request("POST", "/v1/session", req);
  }

  stop(): Promise<SessionSnapshot> {
    return this.request("POST", "/v1/session/stop");
  }

  resume(): Promise<SessionSnapshot> {
    return this.request("POST", "/v1/session/resume");
  }

  stageAdjustment(trajectory: TrajectoryPayload): Promise<SessionSnapshot> {
    return this.request("POST", "/v1/session/adjustment", trajectory);
  }

  submitSurvey(questionId: string, value: number, comment?: string): Promise<SessionSnapshot> {
    const body: Record<string, unknown> = { question_id: questionId, value };
    if (comment !== undefined) body["comment"] = comment;
    return this.request("POST", "/v1/session/survey", body);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(`${this.base}${path}`, init);

    let parsed: unknown = null;
    try {
      parsed = await res.json();
    } catch {
      // non-JSON body; fall through to the status check
    }

    if (!res.ok) {
      const obj = (parsed ?? {}) as Record<string, unknown>;
      const code = typeof obj["code"] === "string" ? (obj["code"] as string) : "http_error";
      const message =
        typeof obj["message"] === "string" ? (obj["message"] as string) : `HTTP ${res.status}`;
      const { code: _c, message: _m, ...details } = obj;
      throw new ApiError(res.status, code, message, details);
    }
    return parsed as T;
  }
}
