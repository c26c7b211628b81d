/** Trajectory adjustment editor: three orthographic views (xy / xz / yz)
 * with draggable waypoints, a one-click contraction preset, and inline
 * violation highlighting.
 *
 * EditorCore is plain data + operations so the behavior is testable
 * without a canvas; TrajectoryEditor wires it to pointer events.
 */

import {
  PLANES,
  PLANE_AXES,
  cloneWaypoints,
  contractToward,
  dragBump,
  fitView,
  fromPx,
  hitTest,
  serializeTrajectory,
  toPx,
  violationIndexSet,
  workspaceViolations,
  type Plane,
  type ViewTransform,
} from "./geometry.js";
import type { TrajectoryPayload, Violation, Waypoint, WorkspaceBox } from "./types.js";

/** The preset pulls the remaining segment 20% toward the hold point. */
export const CONTRACT_FACTOR = 0.8;

export class EditorCore {
  private original: Waypoint[];
  working: Waypoint[];
  serverViolations: Violation[] = [];

  constructor(
    consequent: Waypoint[],
    readonly workspace: WorkspaceBox,
  ) {
    this.original = cloneWaypoints(consequent);
    this.working = cloneWaypoints(consequent);
  }

  get dirty(): boolean {
    if (this.working.length !== this.original.length) return true;
    return this.working.some((w, i) => {
      const o = this.original[i];
      return o === undefined || w.x !== o.x || w.y !== o.y || w.z !== o.z;
    });
  }

  /** Contract toward the hold point (waypoint 0 stays pinned). */
  applyPreset(factor: number = CONTRACT_FACTOR): void {
    this.working = contractToward(this.working, factor, 0);
    this.serverViolations = [];
  }

  /** Drag waypoint `index` in `plane`; index 0 is the pinned resume point. */
  drag(index: number, plane: Plane, du: number, dv: number): void {
    if (index <= 0) return;
    this.working = dragBump(this.working, index, plane, du, dv);
    this.serverViolations = [];
  }

  revert(): void {
    this.working = cloneWaypoints(this.original);
    this.serverViolations = [];
  }

  /** Advisory pre-check: indices outside the workspace box. */
  clientViolations(): number[] {
    return workspaceViolations(this.working, this.workspace);
  }

  setServerViolations(violations: Violation[]): void {
    this.serverViolations = violations;
  }

  /** Union of client pre-check and server rejection indices. */
  highlightIndices(): Set<number> {
    const out = violationIndexSet(this.serverViolations);
    for (const i of this.clientViolations()) out.add(i);
    return out;
  }

  payload(): TrajectoryPayload {
    return serializeTrajectory(this.working);
  }
}

const VIEW_W = 270;
const VIEW_H = 220;

export class TrajectoryEditor {
  private core: EditorCore;
  private canvases = new Map<Plane, HTMLCanvasElement>();
  private transforms = new Map<Plane, ViewTransform>();
  private dragging: { plane: Plane; index: number; lastU: number; lastV: number } | null = null;

  /** `onChange` fires after any edit so the host can refresh its chrome. */
  constructor(
    private root: HTMLElement,
    core: EditorCore,
    private onChange: () => void,
  ) {
    this.core = core;
    root.textContent = "";
    const row = document.createElement("div");
    row.className = "editor-views";
    for (const plane of PLANES) {
      const cell = document.createElement("div");
      cell.className = "editor-cell";
      const label = document.createElement("div");
      label.className = "editor-label";
      label.textContent = plane;
      const canvas = document.createElement("canvas");
      canvas.width = VIEW_W * devicePixelRatio;
      canvas.height = VIEW_H * devicePixelRatio;
      canvas.style.width = `${VIEW_W}px`;
      canvas.style.height = `${VIEW_H}px`;
      this.bindPointer(canvas, plane);
      cell.append(label, canvas);
      row.append(cell);
      this.canvases.set(plane, canvas);
    }
    root.append(row);
    this.render();
  }

  render(): void {
    for (const plane of PLANES) {
      const canvas = this.canvases.get(plane);
      if (canvas === undefined) continue;
      const tf = fitView(this.core.working, this.core.workspace, plane, VIEW_W, VIEW_H);
      this.transforms.set(plane, tf);
      this.draw(canvas, plane, tf);
    }
  }

  private draw(canvas: HTMLCanvasElement, plane: Plane, tf: ViewTransform): void {
    const ctx = canvas.getContext("2d");
    if (ctx === null) return;
    ctx.save();
    ctx.scale(devicePixelRatio, devicePixelRatio);
    ctx.clearRect(0, 0, VIEW_W, VIEW_H);

    const [ua, va] = PLANE_AXES[plane];
    const axisIdx = { x: 0, y: 1, z: 2 } as const;

    // workspace box
    const [bx0, by0] = toPx(tf, this.core.workspace.lo[axisIdx[ua]], this.core.workspace.hi[axisIdx[va]]);
    const [bx1, by1] = toPx(tf, this.core.workspace.hi[axisIdx[ua]], this.core.workspace.lo[axisIdx[va]]);
    ctx.strokeStyle = "rgba(120, 130, 160, 0.45)";
    ctx.setLineDash([4, 4]);
    ctx.strokeRect(bx0, by0, bx1 - bx0, by1 - by0);
    ctx.setLineDash([]);

    const wps = this.core.working;
    if (wps.length === 0) {
      ctx.restore();
      return;
    }

    // path
    ctx.beginPath();
    wps.forEach((w, i) => {
      const [x, y] = toPx(tf, w[ua], w[va]);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.strokeStyle = "#5b8df8";
    ctx.lineWidth = 1.5;
    ctx.stroke();

    // waypoint dots: anchor, a sparse subset for grabbing, and violations
    const bad = this.core.highlightIndices();
    const step = Math.max(1, Math.floor(wps.length / 60));
    wps.forEach((w, i) => {
      const isBad = bad.has(i);
      if (i !== 0 && i !== wps.length - 1 && i % step !== 0 && !isBad) return;
      const [x, y] = toPx(tf, w[ua], w[va]);
      ctx.beginPath();
      ctx.arc(x, y, i === 0 ? 5 : 3, 0, Math.PI * 2);
      ctx.fillStyle = isBad ? "#f87171" : i === 0 ? "#fbbf24" : "#a0b6f0";
      ctx.fill();
    });
    ctx.restore();
  }

  private bindPointer(canvas: HTMLCanvasElement, plane: Plane): void {
    canvas.addEventListener("pointerdown", (ev) => {
      const tf = this.transforms.get(plane);
      if (tf === undefined) return;
      const rect = canvas.getBoundingClientRect();
      const px = ev.clientX - rect.left;
      const py = ev.clientY - rect.top;
      const index = hitTest(this.core.working, plane, tf, px, py);
      if (index <= 0) return; // -1 = miss, 0 = pinned resume point
      const [u, v] = fromPx(tf, px, py);
      this.dragging = { plane, index, lastU: u, lastV: v };
      canvas.setPointerCapture(ev.pointerId);
    });
    canvas.addEventListener("pointermove", (ev) => {
      const drag = this.dragging;
      if (drag === null || drag.plane !== plane) return;
      const tf = this.transforms.get(plane);
      if (tf === undefined) return;
      const rect = canvas.getBoundingClientRect();
      const [u, v] = fromPx(tf, ev.clientX - rect.left, ev.clientY - rect.top);
      this.core.drag(drag.index, plane, u - drag.lastU, v - drag.lastV);
      drag.lastU = u;
      drag.lastV = v;
      this.render();
      this.onChange();
    });
    const finish = (ev: PointerEvent) => {
      if (this.dragging !== null) {
        this.dragging = null;
        canvas.releasePointerCapture(ev.pointerId);
        this.onChange();
      }
    };
    canvas.addEventListener("pointerup", finish);
    canvas.addEventListener("pointercancel", finish);
  }
}
