/** End-to-end tests against a real local service instance.
 *
 * `rehab serve` is spawned on a random port with a fast pace so the whole
 * story (stop, reject, adjust, resume, survey) plays out in seconds. The
 * service must be installed and on PATH (pip install -e . in the repo root).
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, expect, test } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { EditorCore } from "../src/editor.js";
import { streamFrames } from "../src/sse.js";
import { validateRating } from "../src/survey.js";
import type { SessionSnapshot, TelemetryFrame, Waypoint } from "../src/types.js";

const PORT = 18000 + Math.floor(Math.random() * 20000);
const BASE = `http://127.0.0.1:${PORT}`;

const PROFILE = {
  rom_center: [0.1, 0.0, 0.0],
  rom_radii: [5.0, 5.0, 5.0],
  stiffness_k: 100.0,
  comfort_margin: 0.9,
  stop_threshold: 10.0,
  noise_sigma: 0.0,
  seed: 1,
};

let server: ChildProcess;
let serverLog = "";
const api = new ApiClient(BASE);

// shared story state, filled in sequence by the tests below
let holdSnapshot: SessionSnapshot;
let originalWaypoints: Waypoint[] = [];

async function waitUntil(
  predicate: (snap: SessionSnapshot | null) => boolean,
  timeoutMs = 15_000,
): Promise<SessionSnapshot | null> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const snap = await api.getSession();
    if (predicate(snap)) return snap;
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting; last state=${snap?.state ?? "none"}`);
    }
    await new Promise((r) => setTimeout(r, 20));
  }
}

/** Linear interpolation of the pre-adjustment trajectory at time t. */
function originalAt(t: number): [number, number, number] {
  const wps = originalWaypoints;
  const first = wps[0]!;
  const last = wps[wps.length - 1]!;
  if (t <= first.t) return [first.x, first.y, first.z];
  if (t >= last.t) return [last.x, last.y, last.z];
  for (let i = 1; i < wps.length; i++) {
    const b = wps[i]!;
    if (b.t >= t) {
      const a = wps[i - 1]!;
      const u = (t - a.t) / (b.t - a.t || 1e-12);
      return [a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), a.z + u * (b.z - a.z)];
    }
  }
  return [last.x, last.y, last.z];
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "rehab-ui-"));
  server = spawn(
    "rehab",
    ["serve", "--bind", `127.0.0.1:${PORT}`, "--data", dataDir, "--pace", "0.005"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (c: Buffer) => (serverLog += c.toString()));
  server.stderr?.on("data", (c: Buffer) => (serverLog += c.toString()));

  const deadline = Date.now() + 20_000;
  for (;;) {
    try {
      await fetch(`${BASE}/v1/session`);
      return;
    } catch {
      if (Date.now() > deadline) {
        throw new Error(`service never came up on ${BASE}\n${serverLog}`);
      }
      await new Promise((r) => setTimeout(r, 150));
    }
  }
});

afterAll(() => {
  server?.kill("SIGTERM");
});

test("no session yet: snapshot is null, stop is a clean 404", async () => {
  expect(await api.getSession()).toBeNull();
  const err = await api.stop().catch((e) => e);
  expect(err).toBeInstanceOf(ApiError);
  expect(err.status).toBe(404);
  expect(err.code).toBe("no_session");
});

test("session starts and reaches running", async () => {
  const snap = await api.start({
    task: "gross",
    profile: PROFILE,
    stage: 1,
    seed: 1,
    dt: 0.05,
    interval_s: 600.0,
    pace: 0.005,
  });
  expect(snap.session_id.startsWith("sess-")).toBe(true);
  expect(snap.f_safe).toBe(45.0);
  await waitUntil((s) => s !== null && s.state === "running");
});

test("stop round trip is visible within 200 ms", async () => {
  const t0 = performance.now();
  await api.stop();
  const snap = await waitUntil((s) => s !== null && s.state === "holding", 5_000);
  const elapsedMs = performance.now() - t0;
  expect(elapsedMs).toBeLessThanOrEqual(200);

  holdSnapshot = snap!;
  expect(holdSnapshot.trajectory).toBeDefined();
  expect(holdSnapshot.resume_index).toBeDefined();
  originalWaypoints = holdSnapshot.trajectory!.waypoints.map((w) => ({ ...w }));
});

test("out-of-workspace waypoint is rejected with the violating index surfaced", async () => {
  const consequent = holdSnapshot.trajectory!.waypoints.slice(holdSnapshot.resume_index!);
  const core = new EditorCore(consequent, holdSnapshot.workspace);
  core.working[50] = { ...core.working[50]!, x: 2.0, y: 2.0, z: 2.0 };

  // the advisory pre-check already flags it before any network round trip
  expect(core.clientViolations()).toContain(50);

  const err = await api.stageAdjustment(core.payload()).catch((e) => e);
  expect(err).toBeInstanceOf(ApiError);
  expect(err.status).toBe(422);
  expect(err.code).toBe("limit_violation");
  const workspaceHits = (err as ApiError).violations.filter((v) => v.kind === "workspace");
  expect(workspaceHits.map((v) => v.index)).toContain(50);

  // the editor surfaces exactly those indices for highlighting
  core.setServerViolations((err as ApiError).violations);
  expect(core.highlightIndices().has(50)).toBe(true);

  // and the session is still holding, unharmed
  const snap = await api.getSession();
  expect(snap?.state).toBe("holding");
});

test("preset contraction stages, resumes, and shows up in telemetry", async () => {
  const consequent = holdSnapshot.trajectory!.waypoints.slice(holdSnapshot.resume_index!);
  const core = new EditorCore(consequent, holdSnapshot.workspace);
  core.applyPreset();
  expect(core.clientViolations()).toEqual([]);

  const staged = await api.stageAdjustment(core.payload());
  expect(staged.staged_adjustment).toBe(true);

  await api.resume();
  const running = await waitUntil((s) => s !== null && s.state === "running");
  expect(running!.adjustments).toBe(1);

  // collect a stretch of post-resume telemetry and compare against the
  // pre-adjustment trajectory: the contraction must be visible in positions
  const holdT = holdSnapshot.t;
  const frames: TelemetryFrame[] = [];
  const ac = new AbortController();
  try {
    for await (const frame of streamFrames(`${BASE}/v1/stream`, { signal: ac.signal })) {
      if (frame.event !== "telemetry") continue;
      const data = JSON.parse(frame.data) as TelemetryFrame;
      if (data.t > holdT + 1.0) frames.push(data);
      if (frames.length >= 80) break;
    }
  } finally {
    ac.abort();
  }
  expect(frames.length).toBeGreaterThanOrEqual(80);
  const maxDeviation = Math.max(
    ...frames.map((f) => {
      const [ox, oy, oz] = originalAt(f.t);
      return Math.hypot(f.pos[0] - ox, f.pos[1] - oy, f.pos[2] - oz);
    }),
  );
  expect(maxDeviation).toBeGreaterThan(0.002);
});

test("survey values outside 1..10 are rejected by client check and server alike", async () => {
  // client-side gate
  expect(validateRating("11")).toBeNull();
  expect(validateRating("0")).toBeNull();

  // server-side authority behind it
  for (const value of [0, 11]) {
    const err = await api.submitSurvey("overall", value).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(422);
    expect(err.code).toBe("out_of_range");
  }

  const ok = await api.submitSurvey("overall", 8);
  expect(ok.survey["overall"]).toBe(8);
});
