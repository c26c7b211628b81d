/** Live telemetry rendering and stream-health tracking.
 *
 * Every mode shown here is whatever the server last reported; the client
 * keeps no safety logic of its own.
 */

import type { Mode, TelemetryFrame, WorkspaceBox } from "./types.js";
import { fitView, toPx, type ViewTransform } from "./geometry.js";

export const STALE_AFTER_MS = 2000;

/** Tracks time since the last telemetry frame. Clock injectable for tests. */
export class StaleWatch {
  private last: number | null = null;

  constructor(
    private readonly thresholdMs: number = STALE_AFTER_MS,
    private readonly now: () => number = () => Date.now(),
  ) {}

  markFrame(): void {
    this.last = this.now();
  }

  reset(): void {
    this.last = null;
  }

  /** True once a frame has arrived and the threshold has since elapsed. */
  isStale(): boolean {
    return this.last !== null && this.now() - this.last > this.thresholdMs;
  }
}

const MODE_LABELS: Record<Mode, string> = {
  idle: "Idle",
  running: "Running",
  soft_hold: "Soft hold",
  resting: "Resting",
  emergency_stop: "EMERGENCY STOP",
};

const TRACE_W = 270;
const TRACE_H = 220;
const TRACE_KEEP = 600;

export class TelemetryPanel {
  private modeBadge: HTMLElement;
  private readout: HTMLElement;
  private banner: HTMLElement;
  private canvas: HTMLCanvasElement;
  private log: HTMLElement;
  private recent: TelemetryFrame[] = [];
  private workspace: WorkspaceBox | null = null;

  constructor(root: HTMLElement) {
    root.textContent = "";
    this.banner = el("div", "banner hidden", "Telemetry stale: no frames for over 2 s. Check the service.");
    this.modeBadge = el("span", "mode-badge mode-idle", "no session");
    const header = el("div", "telemetry-header");
    header.append(this.modeBadge);
    this.readout = el("div", "readout");
    this.canvas = document.createElement("canvas");
    this.canvas.width = TRACE_W * devicePixelRatio;
    this.canvas.height = TRACE_H * devicePixelRatio;
    this.canvas.style.width = `${TRACE_W}px`;
    this.canvas.style.height = `${TRACE_H}px`;
    this.log = el("div", "event-log");
    root.append(this.banner, header, this.readout, this.canvas, this.log);
  }

  setWorkspace(box: WorkspaceBox | null): void {
    this.workspace = box;
    this.recent = [];
  }

  setStale(stale: boolean): void {
    this.banner.classList.toggle("hidden", !stale);
  }

  setModeText(text: string, cls = "idle"): void {
    this.modeBadge.textContent = text;
    this.modeBadge.className = `mode-badge mode-${cls}`;
  }

  frame(f: TelemetryFrame): void {
    this.setModeText(MODE_LABELS[f.mode] ?? f.mode, f.mode);
    const [x, y, z] = f.pos;
    const grip = f.grip === null ? "-" : f.grip.toFixed(2);
    this.readout.textContent =
      `t ${f.t.toFixed(2)} s   pos (${x.toFixed(3)}, ${y.toFixed(3)}, ${z.toFixed(3)}) m   ` +
      `grip ${grip}   force ${f.force_n.toFixed(1)} N   speed x${f.speed_scale.toFixed(2)}`;
    this.recent.push(f);
    if (this.recent.length > TRACE_KEEP) this.recent.splice(0, this.recent.length - TRACE_KEEP);
    this.drawTrace();
  }

  event(text: string): void {
    const line = el("div", "event-line", text);
    this.log.prepend(line);
    while (this.log.childElementCount > 40) this.log.lastElementChild?.remove();
  }

  private drawTrace(): void {
    const ctx = this.canvas.getContext("2d");
    if (ctx === null || this.recent.length === 0) return;
    ctx.save();
    ctx.scale(devicePixelRatio, devicePixelRatio);
    ctx.clearRect(0, 0, TRACE_W, TRACE_H);

    const pts = this.recent.map((f) => ({ t: 0, x: f.pos[0], y: f.pos[1], z: f.pos[2] }));
    const box = this.workspace ?? { lo: [-0.3, -0.3, -0.3] as [number, number, number], hi: [0.3, 0.3, 0.3] as [number, number, number] };
    const tf: ViewTransform = fitView(pts, box, "xy", TRACE_W, TRACE_H);

    ctx.strokeStyle = "rgba(120, 130, 160, 0.45)";
    ctx.setLineDash([4, 4]);
    const [bx0, by0] = toPx(tf, box.lo[0], box.hi[1]);
    const [bx1, by1] = toPx(tf, box.hi[0], box.lo[1]);
    ctx.strokeRect(bx0, by0, bx1 - bx0, by1 - by0);
    ctx.setLineDash([]);

    ctx.beginPath();
    pts.forEach((p, i) => {
      const [px, py] = toPx(tf, p.x, p.y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.strokeStyle = "#34d399";
    ctx.lineWidth = 1.5;
    ctx.stroke();

    const last = pts[pts.length - 1];
    if (last !== undefined) {
      const [px, py] = toPx(tf, last.x, last.y);
      ctx.beginPath();
      ctx.arc(px, py, 4, 0, Math.PI * 2);
      ctx.fillStyle = "#fbbf24";
      ctx.fill();
    }
    ctx.restore();
  }
}

function el(tag: string, className: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== "") node.textContent = text;
  return node;
}
