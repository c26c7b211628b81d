/** Pure geometry for the trajectory editor: orthographic projections,
 * waypoint editing operations, and the client-side workspace pre-check.
 *
 * The pre-check is advisory. It mirrors the server's workspace rule so the
 * expert sees a violation before submitting, but the server re-validates
 * every proposal and remains the only authority.
 */

import type { TrajectoryPayload, Violation, Waypoint, WorkspaceBox } from "./types.js";

export type Plane = "xy" | "xz" | "yz";
export type Axis = "x" | "y" | "z";

export const PLANES: Plane[] = ["xy", "xz", "yz"];

export const PLANE_AXES: Record<Plane, [Axis, Axis]> = {
  xy: ["x", "y"],
  xz: ["x", "z"],
  yz: ["y", "z"],
};

export function cloneWaypoints(wps: Waypoint[]): Waypoint[] {
  return wps.map((w) => ({ ...w }));
}

/** Pull every waypoint after `anchorIndex` toward the anchor point.
 *
 * `factor` scales distances from the anchor: 0.8 contracts by 20 percent.
 * The anchor itself (and anything before it) never moves, which keeps the
 * resume point byte-exact and scales segment velocities by `factor`, so a
 * limit-clean trajectory stays limit-clean.
 */
export function contractToward(wps: Waypoint[], factor: number, anchorIndex = 0): Waypoint[] {
  const anchor = wps[anchorIndex];
  if (anchor === undefined) return cloneWaypoints(wps);
  return wps.map((w, i) => {
    if (i <= anchorIndex) return { ...w };
    return {
      ...w,
      x: anchor.x + factor * (w.x - anchor.x),
      y: anchor.y + factor * (w.y - anchor.y),
      z: anchor.z + factor * (w.z - anchor.z),
    };
  });
}

/** Indices of waypoints outside the (inclusive) workspace box. */
export function workspaceViolations(wps: Waypoint[], box: WorkspaceBox): number[] {
  const out: number[] = [];
  const [lx, ly, lz] = box.lo;
  const [hx, hy, hz] = box.hi;
  wps.forEach((w, i) => {
    if (w.x < lx || w.x > hx || w.y < ly || w.y > hy || w.z < lz || w.z > hz) out.push(i);
  });
  return out;
}

/** Displace waypoint `index` by (du, dv) in `plane` with a Gaussian falloff
 * over neighbors, so a drag bends the path smoothly instead of kinking it.
 * Waypoints at or before `lockedBefore` never move (the resume point is
 * pinned; the server rejects any proposal that shifts it).
 */
export function dragBump(
  wps: Waypoint[],
  index: number,
  plane: Plane,
  du: number,
  dv: number,
  sigma = 12,
  lockedBefore = 1,
): Waypoint[] {
  const [ua, va] = PLANE_AXES[plane];
  return wps.map((w, i) => {
    if (i < lockedBefore) return { ...w };
    const k = (i - index) / sigma;
    const g = Math.exp(-0.5 * k * k);
    if (g < 1e-3) return { ...w };
    const moved = { ...w };
    moved[ua] = w[ua] + du * g;
    moved[va] = w[va] + dv * g;
    return moved;
  });
}

/** Serialize editor waypoints to the exact trajectory JSON the service
 * accepts. Grip is included only where the source waypoint carries one.
 */
export function serializeTrajectory(wps: Waypoint[], frame = "base"): TrajectoryPayload {
  return {
    frame,
    waypoints: wps.map((w) => {
      const row: Waypoint = { t: w.t, x: w.x, y: w.y, z: w.z };
      if (w.grip !== undefined) row.grip = w.grip;
      return row;
    }),
  };
}

/** Map server limit violations to the set of waypoint indices to highlight. */
export function violationIndexSet(violations: Violation[]): Set<number> {
  return new Set(violations.map((v) => v.index).filter((i) => Number.isInteger(i) && i >= 0));
}

// -- view transforms -----------------------------------------------------

export interface ViewTransform {
  scale: number; // px per meter
  u0: number; // world u at canvas centre
  v0: number;
  w: number; // canvas size, css px
  h: number;
}

/** Fit a transform so every waypoint (and the workspace box) is visible. */
export function fitView(
  wps: Waypoint[],
  box: WorkspaceBox,
  plane: Plane,
  w: number,
  h: number,
  marginPx = 18,
): ViewTransform {
  const [ua, va] = PLANE_AXES[plane];
  const axisIdx: Record<Axis, number> = { x: 0, y: 1, z: 2 };
  let uMin = box.lo[axisIdx[ua]] ?? -1;
  let uMax = box.hi[axisIdx[ua]] ?? 1;
  let vMin = box.lo[axisIdx[va]] ?? -1;
  let vMax = box.hi[axisIdx[va]] ?? 1;
  for (const wp of wps) {
    uMin = Math.min(uMin, wp[ua]);
    uMax = Math.max(uMax, wp[ua]);
    vMin = Math.min(vMin, wp[va]);
    vMax = Math.max(vMax, wp[va]);
  }
  const spanU = Math.max(uMax - uMin, 1e-6);
  const spanV = Math.max(vMax - vMin, 1e-6);
  const scale = Math.min((w - 2 * marginPx) / spanU, (h - 2 * marginPx) / spanV);
  return { scale, u0: (uMin + uMax) / 2, v0: (vMin + vMax) / 2, w, h };
}

/** World (u, v) to canvas px; v points up on screen. */
export function toPx(tf: ViewTransform, u: number, v: number): [number, number] {
  return [tf.w / 2 + (u - tf.u0) * tf.scale, tf.h / 2 - (v - tf.v0) * tf.scale];
}

/** Canvas px back to world (u, v). */
export function fromPx(tf: ViewTransform, px: number, py: number): [number, number] {
  return [tf.u0 + (px - tf.w / 2) / tf.scale, tf.v0 - (py - tf.h / 2) / tf.scale];
}

/** Index of the waypoint nearest to (px, py) within `radiusPx`, or -1. */
export function hitTest(
  wps: Waypoint[],
  plane: Plane,
  tf: ViewTransform,
  px: number,
  py: number,
  radiusPx = 10,
): number {
  const [ua, va] = PLANE_AXES[plane];
  let best = -1;
  let bestD2 = radiusPx * radiusPx;
  wps.forEach((w, i) => {
    const [x, y] = toPx(tf, w[ua], w[va]);
    const d2 = (x - px) * (x - px) + (y - py) * (y - py);
    if (d2 <= bestD2) {
      best = i;
      bestD2 = d2;
    }
  });
  return best;
}
