// Thin typed client for the consultation service. All diagnostic numbers come
// from the server; this module only moves JSON.

import type { AnswerValue, FindingInfo, SessionView, StepResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function request<T>(fetchFn: FetchLike, url: string, init?: RequestInit): Promise<T> {
  let res: Response;
  try {
    res = await fetchFn(url, init);
  } catch (err) {
    throw new ApiError(0, "network", `cannot reach the server: ${String(err)}`);
  }
  let body: unknown = null;
  try {
    body = await res.json();
  } catch {
    body = null;
  }
  if (!res.ok) {
    const e = (body ?? {}) as { code?: string; message?: string };
    throw new ApiError(res.status, e.code ?? `http_${res.status}`, e.message ?? res.statusText);
  }
  return body as T;
}

export class ConsultApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  health(): Promise<{ status: string; model_loaded: boolean }> {
    return request(this.fetchFn, `${this.base}/api/health`);
  }

  findings(): Promise<FindingInfo[]> {
    return request(this.fetchFn, `${this.base}/api/findings`);
  }

  createSession(selfReports: number[]): Promise<StepResponse> {
    return request(this.fetchFn, `${this.base}/api/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ self_reports: selfReports }),
    });
  }

  submitAnswer(sessionId: string, answer: AnswerValue): Promise<StepResponse> {
    return request(this.fetchFn, `${this.base}/api/sessions/${sessionId}/answer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ answer }),
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return request(this.fetchFn, `${this.base}/api/sessions/${sessionId}`);
  }
}
