/** Minimal typed client for the session service.
 *
 * The protocol is strictly turn based: the client keeps at most one
 * request in flight per session and treats the server as the only source
 * of truth (no optimistic updates).
 */

import type {
  ApiErrorBody, Assignment, ProblemInfo, Recommendation, SessionState,
  TurnResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public body: ApiErrorBody) {
    super(body.message);
  }
}

export class SessionClient {
  private inFlight = false;

  constructor(public baseUrl: string, public sessionId: string | null = null) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    if (this.inFlight) {
      throw new Error("a request for this session is already in flight");
    }
    this.inFlight = true;
    try {
      const response = await fetch(`${this.baseUrl}${path}`, {
        headers: { "content-type": "application/json" },
        ...init,
      });
      const body = await response.json();
      if (!response.ok) {
        throw new ApiError(response.status, body as ApiErrorBody);
      }
      return body as T;
    } finally {
      this.inFlight = false;
    }
  }

  async health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  async listProblems(): Promise<ProblemInfo[]> {
    return this.request("/problems");
  }

  async createSession(problem: string, options: Record<string, unknown> = {}):
      Promise<SessionState> {
    const state = await this.request<SessionState>("/sessions", {
      method: "POST",
      body: JSON.stringify({ problem, options }),
    });
    this.sessionId = state.session_id;
    return state;
  }

  async recommendation(): Promise<Recommendation> {
    return this.request(`/sessions/${this.sessionId}/recommendation`);
  }

  async submitImprovement(assignment: Assignment): Promise<TurnResult> {
    return this.request(`/sessions/${this.sessionId}/improvement`, {
      method: "POST",
      body: JSON.stringify({ assignment }),
    });
  }

  async state(): Promise<SessionState> {
    return this.request(`/sessions/${this.sessionId}/state`);
  }

  async remove(): Promise<void> {
    await this.request(`/sessions/${this.sessionId}`, { method: "DELETE" });
  }
}

/** Build the improvement payload from the recommended assignment and the
 * user's edits. Edits outside the recommended part are dropped: the
 * payload assigns exactly the recommended part's variables, always. */
export function buildImprovementPayload(
  recommended: Assignment, edits: Assignment): Assignment {
  const payload: Assignment = {};
  for (const name of Object.keys(recommended)) {
    payload[name] = Object.prototype.hasOwnProperty.call(edits, name)
      ? edits[name]
      : recommended[name];
  }
  return payload;
}
