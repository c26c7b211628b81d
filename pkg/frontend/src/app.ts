/** Application shell: hash routing between the subject and expert views,
 * the shared telemetry feed, and command wiring.
 *
 * Commands are fire-and-confirm: pressing stop/resume disables the control
 * until the mode change shows up in server telemetry (or the snapshot
 * poller sees it). The client never decides modes itself.
 */

import { ApiClient, ApiError } from "./api.js";
import { CONTRACT_FACTOR, EditorCore, TrajectoryEditor } from "./editor.js";
import { streamFrames } from "./sse.js";
import { StaleWatch, TelemetryPanel } from "./telemetry.js";
import { SurveyForm } from "./survey.js";
import type {
  SessionSnapshot,
  StreamEvent,
  TelemetryFrame,
  TransitionEvent,
  Waypoint,
} from "./types.js";

export type Route = "subject" | "expert";

export function parseRoute(hash: string): Route {
  return hash.replace(/^#\/?/, "") === "expert" ? "expert" : "subject";
}

/** API base: `?api=http://host:port` wins and is remembered; otherwise the
 * remembered value; otherwise the default local service address.
 */
export function resolveApiBase(
  search: string,
  storage: Pick<Storage, "getItem" | "setItem">,
  fallback = "http://127.0.0.1:8000",
): string {
  const params = new URLSearchParams(search.startsWith("?") ? search.slice(1) : search);
  const fromQuery = params.get("api");
  if (fromQuery !== null && fromQuery !== "") {
    try {
      storage.setItem("rehab.api", fromQuery);
    } catch {
      // private mode; remembering is best-effort
    }
    return fromQuery.replace(/\/+$/, "");
  }
  const saved = storage.getItem("rehab.api");
  return (saved ?? fallback).replace(/\/+$/, "");
}

const DEFAULT_PROFILE = {
  rom_center: [0.1, 0.0, 0.0],
  rom_radii: [0.15, 0.12, 0.1],
  stiffness_k: 600.0,
  comfort_margin: 0.85,
  stop_threshold: 5.0,
  noise_sigma: 0.01,
  seed: 7,
};

type Phase = "none" | "active" | "holding" | "terminal";

function phaseOf(snap: SessionSnapshot | null): Phase {
  if (snap === null) return "none";
  if (snap.state === "completed" || snap.state === "aborted") return "terminal";
  if (snap.state === "holding") return "holding";
  return "active";
}

export class App {
  private api: ApiClient;
  private route: Route;
  private snapshot: SessionSnapshot | null = null;
  private phase: Phase = "none";
  private stale = new StaleWatch();
  private streamAbort: AbortController | null = null;
  private closed = false;

  // fire-and-confirm latches
  private pendingStop = false;
  private pendingResume = false;
  private lastError = "";

  // chrome
  private main: HTMLElement;
  private tabs = new Map<Route, HTMLElement>();
  private connDot: HTMLElement;

  // per-phase widgets (rebuilt on phase/route changes)
  private telemetry: TelemetryPanel | null = null;
  private editor: TrajectoryEditor | null = null;
  private editorCore: EditorCore | null = null;
  private editorNote: HTMLElement | null = null;
  private statusLine: HTMLElement | null = null;
  private stopBtn: HTMLButtonElement | null = null;
  private resumeBtn: HTMLButtonElement | null = null;

  constructor(
    private root: HTMLElement,
    api: ApiClient,
  ) {
    this.api = api;
    this.route = parseRoute(location.hash);

    root.textContent = "";
    const header = document.createElement("header");
    const title = document.createElement("h1");
    title.textContent = "Rehab steering";
    this.connDot = document.createElement("span");
    this.connDot.className = "conn-dot off";
    this.connDot.title = "telemetry stream";
    const nav = document.createElement("nav");
    for (const r of ["subject", "expert"] as Route[]) {
      const a = document.createElement("a");
      a.href = `#/${r}`;
      a.textContent = r === "subject" ? "Subject" : "Expert";
      nav.append(a);
      this.tabs.set(r, a);
    }
    const baseNote = document.createElement("span");
    baseNote.className = "api-base";
    baseNote.textContent = api.base;
    header.append(title, this.connDot, nav, baseNote);

    this.main = document.createElement("main");
    root.append(header, this.main);

    window.addEventListener("hashchange", () => {
      this.route = parseRoute(location.hash);
      this.rebuild();
    });

    this.rebuild();
    void this.pollLoop();
    void this.streamLoop();
    setInterval(() => this.refreshStale(), 500);
  }

  close(): void {
    this.closed = true;
    this.streamAbort?.abort();
  }

  // -- feeds ---------------------------------------------------------------

  private async pollLoop(): Promise<void> {
    while (!this.closed) {
      try {
        const snap = await this.api.getSession();
        this.applySnapshot(snap);
      } catch {
        // poll failures surface via the stale banner; keep trying
      }
      await sleep(1000);
    }
  }

  private async streamLoop(): Promise<void> {
    while (!this.closed) {
      this.streamAbort = new AbortController();
      try {
        for await (const frame of streamFrames(this.api.streamUrl(), {
          signal: this.streamAbort.signal,
        })) {
          this.connDot.classList.remove("off");
          this.handleStream({ kind: frame.event, data: JSON.parse(frame.data) } as StreamEvent);
        }
      } catch {
        // connection lost; retry below
      }
      this.connDot.classList.add("off");
      await sleep(1000);
    }
  }

  private refreshStale(): void {
    const stale = this.stale.isStale();
    this.telemetry?.setStale(stale);
    if (stale) this.connDot.classList.add("off");
  }

  private handleStream(ev: StreamEvent): void {
    switch (ev.kind) {
      case "telemetry":
        this.stale.markFrame();
        this.onTelemetry(ev.data);
        break;
      case "transition": {
        const tr: TransitionEvent = ev.data;
        this.telemetry?.event(`t=${tr.t.toFixed(2)}  ${tr.from} -> ${tr.to}  (${tr.cause})`);
        // a confirmed mode change settles any pending command
        this.pendingStop = false;
        this.pendingResume = false;
        this.updateControls();
        break;
      }
      case "feedback":
        this.telemetry?.event(
          `t=${ev.data.t.toFixed(2)}  feedback: ${ev.data.feedback} at sample ${ev.data.sample_index} (${ev.data.source})`,
        );
        break;
      case "adjustment":
        this.telemetry?.event(
          `t=${ev.data.t.toFixed(2)}  adjustment applied (resume at ${ev.data.resume_index}${ev.data.identity ? ", identity" : ""})`,
        );
        break;
      case "session":
        this.telemetry?.event(
          ev.data.state === "completed"
            ? `session ${ev.data.session_id ?? ""} completed`
            : `session aborted: ${ev.data.error ?? "unknown"}`,
        );
        void this.pollOnce();
        break;
    }
  }

  private onTelemetry(f: TelemetryFrame): void {
    this.telemetry?.frame(f);
    if (this.pendingStop && (f.mode === "soft_hold" || f.mode === "emergency_stop")) {
      this.pendingStop = false;
      this.updateControls();
    }
    if (this.pendingResume && f.mode !== "soft_hold") {
      this.pendingResume = false;
      this.updateControls();
    }
  }

  private async pollOnce(): Promise<void> {
    try {
      this.applySnapshot(await this.api.getSession());
    } catch {
      // next poll tick will retry
    }
  }

  private applySnapshot(snap: SessionSnapshot | null): void {
    const prevPhase = this.phase;
    const prevId = this.snapshot?.session_id;
    this.snapshot = snap;
    this.phase = phaseOf(snap);
    if (snap !== null && (snap.state === "holding" || snap.state === "completed" || snap.state === "aborted")) {
      // snapshot is authoritative when the stream is quiet (hold, terminal)
      this.pendingStop = false;
    }
    if (this.phase !== prevPhase || this.snapshot?.session_id !== prevId) {
      this.rebuild();
    } else {
      this.updateStatus();
      this.updateControls();
    }
  }

  // -- rendering -----------------------------------------------------------

  private rebuild(): void {
    for (const [r, tab] of this.tabs) tab.className = r === this.route ? "active" : "";
    this.main.textContent = "";
    this.telemetry = null;
    this.editor = null;
    this.editorCore = null;
    this.statusLine = null;
    this.stopBtn = null;
    this.resumeBtn = null;

    if (this.route === "subject") this.buildSubject();
    else this.buildExpert();
    this.updateStatus();
    this.updateControls();
  }

  private buildSubject(): void {
    const snap = this.snapshot;
    if (this.phase === "none" || this.phase === "terminal") {
      if (this.phase === "terminal" && snap !== null) {
        this.main.append(this.terminalCard(snap));
        const surveyCard = card("How did it feel?");
        const form = new SurveyForm(surveyCard, async (id, value) => {
          await this.api.submitSurvey(id, value);
        });
        form.showRecorded(snap.survey);
        this.main.append(surveyCard);
      }
      this.main.append(this.startCard());
      return;
    }

    const control = card("Session");
    this.statusLine = div("status-line");
    control.append(this.statusLine);

    const buttons = div("control-row");
    this.stopBtn = button("STOP", "stop-btn");
    this.stopBtn.addEventListener("click", () => void this.doStop());
    this.resumeBtn = button("Resume", "resume-btn");
    this.resumeBtn.addEventListener("click", () => void this.doResume());
    buttons.append(this.stopBtn, this.resumeBtn);
    control.append(buttons);
    const errLine = div("error-line");
    errLine.id = "cmd-error";
    control.append(errLine);
    this.main.append(control);

    const telemetryCard = card("Telemetry");
    const panel = div("telemetry-root");
    telemetryCard.append(panel);
    this.main.append(telemetryCard);
    this.telemetry = new TelemetryPanel(panel);
    this.telemetry.setWorkspace(snap?.workspace ?? null);
  }

  private buildExpert(): void {
    const snap = this.snapshot;
    if (this.phase === "none") {
      this.main.append(card("Expert view", "No session. Start one from the subject view."));
      return;
    }
    if (this.phase === "terminal" && snap !== null) {
      this.main.append(this.terminalCard(snap));
      return;
    }

    const status = card("Session");
    this.statusLine = div("status-line");
    status.append(this.statusLine);
    this.main.append(status);

    if (this.phase === "holding" && snap?.trajectory !== undefined && snap.resume_index !== undefined) {
      const editorCard = card("Adjust the remaining trajectory");
      const consequent = snap.trajectory.waypoints.slice(snap.resume_index) as Waypoint[];
      this.editorCore = new EditorCore(consequent, snap.workspace);
      const editorRoot = div("editor-root");
      editorCard.append(editorRoot);

      this.editorNote = div("editor-note");
      const controls = div("control-row");
      const preset = button(`Contract ${Math.round((1 - CONTRACT_FACTOR) * 100)}% toward hold point`, "");
      preset.addEventListener("click", () => {
        this.editorCore?.applyPreset();
        this.editor?.render();
        this.refreshEditorNote();
      });
      const revert = button("Revert", "");
      revert.addEventListener("click", () => {
        this.editorCore?.revert();
        this.editor?.render();
        this.refreshEditorNote();
      });
      const stage = button("Stage adjustment", "primary");
      stage.addEventListener("click", () => void this.doStageAdjustment());
      const resume = button("Resume session", "resume-btn");
      resume.addEventListener("click", () => void this.doResume());
      this.resumeBtn = resume;
      controls.append(preset, revert, stage, resume);
      editorCard.append(controls, this.editorNote);
      this.main.append(editorCard);

      this.editor = new TrajectoryEditor(editorRoot, this.editorCore, () => this.refreshEditorNote());
      this.refreshEditorNote();
      return;
    }

    const telemetryCard = card("Telemetry", "Waiting for a hold. The editor opens when the subject stops the motion.");
    const panel = div("telemetry-root");
    telemetryCard.append(panel);
    this.main.append(telemetryCard);
    this.telemetry = new TelemetryPanel(panel);
    this.telemetry.setWorkspace(snap?.workspace ?? null);
  }

  private startCard(): HTMLElement {
    const root = card("Start a session");
    const form = div("start-form");

    const task = select(["gross", "fine"]);
    const stage = select(["1", "2", "3"]);
    const seed = input("number", "7");
    const interval = input("number", "60");
    const pace = input("number", "");
    pace.placeholder = "dt";
    const profile = document.createElement("textarea");
    profile.rows = 9;
    profile.value = JSON.stringify(DEFAULT_PROFILE, null, 2);

    form.append(
      labeled("Task", task),
      labeled("Stage", stage),
      labeled("Seed", seed),
      labeled("Interval (s)", interval),
      labeled("Pace (wall s / tick)", pace),
      labeled("Subject profile", profile),
    );

    const err = div("error-line");
    const go = button("Start", "primary");
    go.addEventListener("click", () => {
      let parsed: Record<string, unknown>;
      try {
        parsed = JSON.parse(profile.value) as Record<string, unknown>;
      } catch {
        err.textContent = "profile is not valid JSON";
        return;
      }
      go.disabled = true;
      err.textContent = "";
      const req = {
        task: task.value,
        profile: parsed,
        stage: Number(stage.value),
        seed: Number(seed.value || "0"),
        interval_s: Number(interval.value || "60"),
        ...(pace.value !== "" ? { pace: Number(pace.value) } : {}),
      };
      this.api
        .start(req)
        .then((snap) => this.applySnapshot(snap))
        .catch((e: unknown) => {
          err.textContent = e instanceof ApiError ? `${e.code}: ${e.message}` : String(e);
        })
        .finally(() => {
          go.disabled = false;
        });
    });
    root.append(form, go, err);
    return root;
  }

  private terminalCard(snap: SessionSnapshot): HTMLElement {
    const title = snap.state === "completed" ? "Session completed" : "Session aborted";
    const root = card(title);
    const lines = [
      `session ${snap.session_id} (${snap.task_title})`,
      `converged ${snap.converged}   adjustments ${snap.adjustments}   iterations ${snap.iteration}`,
    ];
    if (snap.evaluation != null) {
      const e = snap.evaluation;
      const rmse = e["rmse_m"];
      const band = e["band_fraction"];
      if (rmse !== undefined && band !== undefined) {
        lines.push(`policy rmse ${rmse.toFixed(4)} m, in-band ${(band * 100).toFixed(1)}%`);
      }
    }
    if (snap.error !== undefined) lines.push(`error: ${snap.error}`);
    for (const ln of lines) root.append(div("status-line", ln));
    return root;
  }

  private updateStatus(): void {
    if (this.statusLine === null || this.snapshot === null) return;
    const s = this.snapshot;
    const bits = [
      `state ${s.state}`,
      `t ${s.t.toFixed(2)} s`,
      `interval ${s.running_ticks}/${s.budget_ticks} ticks`,
      `adjustments ${s.adjustments}`,
      `iteration ${s.iteration}`,
    ];
    if (s.state === "holding" && s.stop_index !== undefined) {
      bits.push(`stopped at sample ${s.stop_index}`);
    }
    this.statusLine.textContent = bits.join("   ");
  }

  private updateControls(): void {
    const active = this.phase === "active" || this.phase === "holding";
    if (this.stopBtn !== null) {
      this.stopBtn.disabled = !active || this.pendingStop;
      this.stopBtn.textContent = this.pendingStop ? "stopping" : this.lastError !== "" ? "Retry STOP" : "STOP";
    }
    if (this.resumeBtn !== null) {
      this.resumeBtn.disabled = this.phase !== "holding" || this.pendingResume;
    }
    const err = document.getElementById("cmd-error");
    if (err !== null) err.textContent = this.lastError;
  }

  // -- commands ------------------------------------------------------------

  private async doStop(): Promise<void> {
    this.pendingStop = true;
    this.updateControls();
    try {
      const snap = await this.api.stop();
      this.lastError = "";
      this.applySnapshot(snap);
    } catch (e: unknown) {
      // network failure: the server stays the safety authority; offer retry
      this.pendingStop = false;
      this.lastError = e instanceof Error ? `stop failed: ${e.message}` : "stop failed";
      this.updateControls();
    }
  }

  private async doResume(): Promise<void> {
    this.pendingResume = true;
    this.updateControls();
    try {
      const snap = await this.api.resume();
      this.lastError = "";
      this.applySnapshot(snap);
    } catch (e: unknown) {
      this.pendingResume = false;
      if (e instanceof ApiError) this.lastError = `${e.code}: ${e.message}`;
      else this.lastError = e instanceof Error ? e.message : "resume failed";
      this.updateControls();
    }
  }

  private async doStageAdjustment(): Promise<void> {
    if (this.editorCore === null) return;
    const advisories = this.editorCore.clientViolations();
    if (advisories.length > 0) {
      this.refreshEditorNote(); // highlights are already visible; make the text explicit
      return;
    }
    try {
      await this.api.stageAdjustment(this.editorCore.payload());
      if (this.editorNote !== null) {
        this.editorNote.textContent = "adjustment staged; resume to apply it";
        this.editorNote.className = "editor-note ok";
      }
    } catch (e: unknown) {
      if (e instanceof ApiError) {
        this.editorCore.setServerViolations(e.violations);
        this.editor?.render();
        const idx = e.violations.map((v) => `#${v.index} (${v.kind})`).join(", ");
        if (this.editorNote !== null) {
          this.editorNote.textContent =
            e.violations.length > 0
              ? `rejected: ${e.code} at ${idx}`
              : `rejected: ${e.code}: ${e.message}`;
          this.editorNote.className = "editor-note err";
        }
      } else if (this.editorNote !== null) {
        this.editorNote.textContent = e instanceof Error ? e.message : "submit failed";
        this.editorNote.className = "editor-note err";
      }
    }
  }

  private refreshEditorNote(): void {
    if (this.editorNote === null || this.editorCore === null) return;
    const advisories = this.editorCore.clientViolations();
    if (advisories.length > 0) {
      const shown = advisories.slice(0, 6).join(", ");
      this.editorNote.textContent =
        `workspace violation at waypoint ${shown}` +
        (advisories.length > 6 ? ` and ${advisories.length - 6} more` : "") +
        " (advisory; the server re-checks every proposal)";
      this.editorNote.className = "editor-note err";
    } else if (this.editorCore.dirty) {
      this.editorNote.textContent = "edited; stage the adjustment, then resume";
      this.editorNote.className = "editor-note";
    } else {
      this.editorNote.textContent = "drag waypoints or use the preset; resuming without staging keeps the trajectory";
      this.editorNote.className = "editor-note";
    }
  }
}

// -- tiny DOM helpers ------------------------------------------------------

function card(title: string, body = ""): HTMLElement {
  const root = div("card");
  const h = document.createElement("h2");
  h.textContent = title;
  root.append(h);
  if (body !== "") root.append(div("card-body", body));
  return root;
}

function div(className: string, text = ""): HTMLElement {
  const node = document.createElement("div");
  node.className = className;
  if (text !== "") node.textContent = text;
  return node;
}

function button(label: string, className: string): HTMLButtonElement {
  const b = document.createElement("button");
  b.textContent = label;
  if (className !== "") b.className = className;
  return b;
}

function select(options: string[]): HTMLSelectElement {
  const s = document.createElement("select");
  for (const o of options) {
    const opt = document.createElement("option");
    opt.value = o;
    opt.textContent = o;
    s.append(opt);
  }
  return s;
}

function input(type: string, value: string): HTMLInputElement {
  const i = document.createElement("input");
  i.type = type;
  i.value = value;
  return i;
}

function labeled(text: string, control: HTMLElement): HTMLElement {
  const row = div("form-row");
  const label = document.createElement("label");
  label.textContent = text;
  row.append(label, control);
  return row;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
