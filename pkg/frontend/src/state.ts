import type { StreamEvent, TelemetrySample, TranscriptEntry, ViewState } from "./types";

export function initialView(): ViewState {
  return {
    sessionId: null,
    status: "Connecting",
    transcript: [],
    latest: null,
    trajectory: [],
    overlays: { groundUsers: [], obstacles: [], waypoints: [] },
    phase: "Disarmed",
    lastSeq: -1,
  };
}

export function addPendingPrompt(view: ViewState, prompt: string): ViewState {
  const entry: TranscriptEntry = { prompt, attempts: [], badge: null, pending: true };
  return { ...view, transcript: [...view.transcript, entry] };
}

function currentEntry(view: ViewState): TranscriptEntry {
  const last = view.transcript[view.transcript.length - 1];
  if (last && last.pending) return last;
  // Events may arrive for a mission started elsewhere (page reload): make a slot.
  const entry: TranscriptEntry = { prompt: "", attempts: [], badge: null, pending: true };
  view.transcript.push(entry);
  return entry;
}

function badgeFor(payload: Record<string, unknown>): string {
  if (payload.status !== "done") return "Unsuccessful";
  return payload.prompts_used === 1 ? "Successful" : "PartiallyCorrect";
}

/** Fold one server event into the view. Events are applied in seq order;
 *  duplicates from a stream handover are dropped. */
export function applyEvent(view: ViewState, event: StreamEvent): ViewState {
  if (event.seq <= view.lastSeq) return view;
  const next: ViewState = {
    ...view,
    transcript: view.transcript.map((e) => ({ ...e, attempts: [...e.attempts] })),
    trajectory: view.trajectory,
    lastSeq: event.seq,
  };
  const p = event.payload;
  switch (event.type) {
    case "attempt":
      currentEntry(next).attempts.push({
        attempt: p.attempt as number,
        completionTokens: p.completion_tokens as number,
        latencyS: p.latency_s as number,
        valid: Boolean(p.valid),
      });
      break;
    case "state":
      next.phase = String(p.phase);
      break;
    case "telemetry": {
      const sample = p as unknown as TelemetrySample;
      next.trajectory = [...view.trajectory, sample];
      next.latest = sample;
      next.phase = sample.phase;
      break;
    }
    case "outcome": {
      const entry = currentEntry(next);
      entry.badge = badgeFor(p);
      entry.pending = false;
      break;
    }
    default:
      break; // compile and future event kinds need no view change yet
  }
  return next;
}

export function replay(view: ViewState, events: StreamEvent[]): ViewState {
  return events.reduce(applyEvent, view);
}
