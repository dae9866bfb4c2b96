import { ApiClient } from "./api";
import { renderMap } from "./map";
import { SseClient } from "./sse";
import { addPendingPrompt, applyEvent, initialView } from "./state";
import type { ViewState } from "./types";

const BASE = (window as unknown as { FLUC_BASE_URL?: string }).FLUC_BASE_URL
  ?? window.location.origin;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const api = new ApiClient(BASE);
  const canvas = el<HTMLCanvasElement>("map");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d unavailable");
  const statusEl = el<HTMLSpanElement>("status");
  const transcriptEl = el<HTMLUListElement>("transcript");
  const form = el<HTMLFormElement>("prompt-form");
  const input = el<HTMLInputElement>("prompt-input");
  const errorEl = el<HTMLSpanElement>("prompt-error");

  let view: ViewState = initialView();
  const session = await api.createSession();
  view = { ...view, sessionId: session.id };

  const redraw = () => {
    statusEl.textContent = `${view.status} | session ${view.sessionId} | ${view.phase}`;
    transcriptEl.replaceChildren(
      ...view.transcript.map((entry) => {
        const li = document.createElement("li");
        const badge = entry.badge ?? (entry.pending ? "running" : "");
        li.textContent = `${entry.prompt} [attempts ${entry.attempts.length}] ${badge}`;
        return li;
      }),
    );
    renderMap(ctx, view, { width: canvas.width, height: canvas.height });
  };

  const stream = new SseClient(api.eventsUrl(session.id), {
    onEvent: (event) => { view = applyEvent(view, event); redraw(); },
    onStatus: (status) => { view = { ...view, status }; redraw(); },
  });
  void stream.start();

  form.addEventListener("submit", (e) => {
    e.preventDefault();
    errorEl.textContent = "";
    const text = input.value;
    if (!text.trim()) {
      errorEl.textContent = "enter a mission prompt";
      return;
    }
    view = addPendingPrompt(view, text);
    redraw();
    void api.submitPrompt(session.id, text).then((result) => {
      if (result.kind === "busy" || result.kind === "rejected") {
        errorEl.textContent = result.detail; // input stays as typed
        view = { ...view, transcript: view.transcript.slice(0, -1) };
      } else {
        input.value = "";
      }
      redraw();
    });
  });

  redraw();
}

void boot();
