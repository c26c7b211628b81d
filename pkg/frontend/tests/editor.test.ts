import { describe, expect, test } from "vitest";

import { CONTRACT_FACTOR, EditorCore } from "../src/editor.js";
import type { Waypoint, WorkspaceBox } from "../src/types.js";

const BOX: WorkspaceBox = { lo: [-0.25, -0.25, -0.1], hi: [0.25, 0.25, 0.35] };

function consequent(): Waypoint[] {
  return Array.from({ length: 21 }, (_, i) => ({
    t: 3.0 + i * 0.05,
    x: 0.1 + i * 0.005,
    y: i * 0.002,
    z: 0,
  }));
}

describe("EditorCore", () => {
  test("starts clean and pristine", () => {
    const core = new EditorCore(consequent(), BOX);
    expect(core.dirty).toBe(false);
    expect(core.clientViolations()).toEqual([]);
    expect(core.highlightIndices().size).toBe(0);
  });

  test("preset pins the hold point and contracts the tail", () => {
    const wps = consequent();
    const core = new EditorCore(wps, BOX);
    core.applyPreset();
    expect(core.dirty).toBe(true);
    expect(core.working[0]).toEqual(wps[0]);
    const last = core.working[20]!;
    const orig = wps[20]!;
    const anchor = wps[0]!;
    expect(last.x).toBeCloseTo(anchor.x + CONTRACT_FACTOR * (orig.x - anchor.x), 12);
    expect(last.y).toBeCloseTo(anchor.y + CONTRACT_FACTOR * (orig.y - anchor.y), 12);
  });

  test("revert restores the original trajectory", () => {
    const core = new EditorCore(consequent(), BOX);
    core.applyPreset();
    core.revert();
    expect(core.dirty).toBe(false);
    expect(core.working).toEqual(consequent());
  });

  test("drag refuses the pinned resume point", () => {
    const core = new EditorCore(consequent(), BOX);
    core.drag(0, "xy", 0.05, 0.05);
    expect(core.dirty).toBe(false);
  });

  test("dragging a waypoint outside the box surfaces an advisory index", () => {
    const core = new EditorCore(consequent(), BOX);
    core.drag(10, "xy", 0, 5.0); // way above the workspace
    const advisories = core.clientViolations();
    expect(advisories).toContain(10);
    expect(core.highlightIndices().has(10)).toBe(true);
  });

  test("server violations merge into the highlight set and clear on edit", () => {
    const core = new EditorCore(consequent(), BOX);
    core.setServerViolations([{ kind: "velocity", index: 7, magnitude: 1.0 }]);
    expect(core.highlightIndices().has(7)).toBe(true);
    core.applyPreset(); // any edit invalidates a stale server verdict
    expect(core.highlightIndices().has(7)).toBe(false);
  });

  test("payload serializes the working copy with absolute times", () => {
    const core = new EditorCore(consequent(), BOX);
    core.applyPreset();
    const payload = core.payload();
    expect(payload.frame).toBe("base");
    expect(payload.waypoints).toHaveLength(21);
    expect(payload.waypoints[0]!.t).toBeCloseTo(3.0, 12);
    expect(payload.waypoints[0]!.x).toBe(0.1);
  });
});
