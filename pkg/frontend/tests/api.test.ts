import { createServer, type Server } from "node:http";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";

// Stub of the mission service: one session, busy flag toggled by the test.
let server: Server;
let base: string;
let busy = false;

beforeAll(async () => {
  server = createServer((req, res) => {
    const send = (code: number, body: unknown) => {
      res.writeHead(code, { "Content-Type": "application/json" });
      res.end(JSON.stringify(body));
    };
    if (req.method === "POST" && req.url === "/v1/sessions") {
      send(201, { id: 1, phase: "Disarmed", position: { east: 0, north: 0, up: 0 },
                  missions: 0, events: 0 });
    } else if (req.method === "GET" && req.url === "/v1/sessions/1") {
      send(200, { id: 1, phase: "Disarmed", position: { east: 0, north: 0, up: 0 },
                  missions: 1, events: 5 });
    } else if (req.method === "POST" && req.url === "/v1/sessions/1/prompt") {
      if (busy) {
        send(409, { detail: "a mission is already running" });
        return;
      }
      let raw = "";
      req.on("data", (c) => (raw += c));
      req.on("end", () => {
        const { text } = JSON.parse(raw) as { text: string };
        send(202, {
          session: 1,
          outcome_index: 0,
          outcome: { prompts_used: 1, classification: "Successful", echoed: text },
        });
      });
    } else {
      send(404, { detail: "not found" });
    }
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const addr = server.address();
  if (addr === null || typeof addr === "string") throw new Error("no port");
  base = `http://127.0.0.1:${addr.port}`;
});

afterAll(() => {
  server.close();
});

describe("ApiClient against a stub server", () => {
  it("creates and fetches a session", async () => {
    const api = new ApiClient(base);
    const created = await api.createSession();
    expect(created.id).toBe(1);
    const fetched = await api.getSession(1);
    expect(fetched.phase).toBe("Disarmed");
  });

  it("round-trips a prompt submission", async () => {
    const api = new ApiClient(base);
    const result = await api.submitPrompt(1, "Go to FEUP");
    expect(result.kind).toBe("accepted");
    if (result.kind !== "accepted") return;
    expect(result.outcomeIndex).toBe(0);
    expect(result.outcome?.classification).toBe("Successful");
    expect(result.outcome?.echoed).toBe("Go to FEUP");
  });

  it("surfaces a 409 inline instead of throwing", async () => {
    const api = new ApiClient(base);
    busy = true;
    const result = await api.submitPrompt(1, "Go to FEUP");
    busy = false;
    expect(result).toEqual({ kind: "busy", detail: "a mission is already running" });
  });

  it("rejects empty prompts client-side", async () => {
    const api = new ApiClient(base, () => {
      throw new Error("must not hit the network");
    });
    const result = await api.submitPrompt(1, "   ");
    expect(result.kind).toBe("rejected");
  });

  it("builds event stream urls", () => {
    const api = new ApiClient(base);
    expect(api.eventsUrl(1)).toBe(`${base}/v1/sessions/1/events`);
    expect(api.eventsUrl(1, false)).toBe(`${base}/v1/sessions/1/events?follow=false`);
  });
});
