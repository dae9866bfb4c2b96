export interface SessionInfo {
  id: number;
  phase: string;
  position: { east: number; north: number; up: number };
  missions: number;
  events: number;
}

export type PromptResult =
  | { kind: "accepted"; outcomeIndex: number; outcome?: Record<string, unknown> }
  | { kind: "busy"; detail: string }
  | { kind: "rejected"; detail: string };

export class ApiClient {
  constructor(private baseUrl: string, private fetchFn: typeof fetch = fetch) {}

  async createSession(): Promise<SessionInfo> {
    const resp = await this.fetchFn(`${this.baseUrl}/v1/sessions`, { method: "POST" });
    if (!resp.ok) throw new Error(`create session failed: ${resp.status}`);
    return (await resp.json()) as SessionInfo;
  }

  async getSession(id: number): Promise<SessionInfo> {
    const resp = await this.fetchFn(`${this.baseUrl}/v1/sessions/${id}`);
    if (!resp.ok) throw new Error(`get session failed: ${resp.status}`);
    return (await resp.json()) as SessionInfo;
  }

  eventsUrl(id: number, follow = true): string {
    return `${this.baseUrl}/v1/sessions/${id}/events${follow ? "" : "?follow=false"}`;
  }

  /** Submit a mission prompt. Empty text never reaches the server; a 409
   *  (mission already running) comes back as an inline result, not a throw. */
  async submitPrompt(id: number, text: string): Promise<PromptResult> {
    if (!text.trim()) return { kind: "rejected", detail: "prompt is empty" };
    const resp = await this.fetchFn(`${this.baseUrl}/v1/sessions/${id}/prompt`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
    if (resp.status === 409) {
      const body = (await resp.json()) as { detail?: string };
      return { kind: "busy", detail: body.detail ?? "a mission is already running" };
    }
    if (!resp.ok) {
      const body = (await resp.json().catch(() => ({}))) as { detail?: string };
      return { kind: "rejected", detail: body.detail ?? `server returned ${resp.status}` };
    }
    const body = (await resp.json()) as {
      outcome_index: number;
      outcome?: Record<string, unknown>;
    };
    return { kind: "accepted", outcomeIndex: body.outcome_index, outcome: body.outcome };
  }
}
