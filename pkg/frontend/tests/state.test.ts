import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { addPendingPrompt, applyEvent, initialView, replay } from "../src/state";
import type { StreamEvent } from "../src/types";

const recorded: StreamEvent[] = JSON.parse(
  readFileSync(new URL("./fixtures/scenario3_events.json", import.meta.url), "utf-8"),
);

describe("event stream replay", () => {
  it("rebuilds trajectory and Successful badge from a recorded mission", () => {
    let view = addPendingPrompt(initialView(), "Fly in a straight diagonal line for 200 meters");
    view = replay(view, recorded);

    expect(view.trajectory.length).toBeGreaterThan(20);
    const first = view.trajectory[0];
    const last = view.trajectory[view.trajectory.length - 1];
    expect(Math.hypot(first.east, first.north)).toBeLessThan(1e-9);
    expect(Math.abs(last.east - 141.42)).toBeLessThan(2);
    expect(Math.abs(last.north - 141.42)).toBeLessThan(2);
    // samples time-ordered
    for (let i = 1; i < view.trajectory.length; i++) {
      expect(view.trajectory[i].t).toBeGreaterThan(view.trajectory[i - 1].t);
    }

    const entry = view.transcript[0];
    expect(entry.badge).toBe("Successful");
    expect(entry.pending).toBe(false);
    expect(entry.attempts).toHaveLength(1);
    expect(entry.attempts[0].valid).toBe(true);
  });

  it("drops duplicate seq numbers from a stream handover", () => {
    let view = addPendingPrompt(initialView(), "p");
    view = replay(view, recorded);
    const again = replay(view, recorded.slice(0, 10));
    expect(again.trajectory.length).toBe(view.trajectory.length);
    expect(again.transcript[0].attempts).toHaveLength(1);
  });

  it("marks a failed outcome Unsuccessful", () => {
    let view = addPendingPrompt(initialView(), "p");
    view = applyEvent(view, {
      type: "outcome", seq: 0, payload: { status: "failed", reason: "attempts exhausted" },
    });
    expect(view.transcript[0].badge).toBe("Unsuccessful");
  });

  it("marks a corrected mission PartiallyCorrect", () => {
    let view = addPendingPrompt(initialView(), "p");
    view = applyEvent(view, {
      type: "outcome", seq: 0, payload: { status: "done", prompts_used: 3 },
    });
    expect(view.transcript[0].badge).toBe("PartiallyCorrect");
  });

  it("tracks vehicle phase from state and telemetry events", () => {
    const view = replay(initialView(), recorded);
    expect(view.phase).toBe("EnRoute");
    expect(view.latest?.up).toBeCloseTo(20, 1);
  });
});
