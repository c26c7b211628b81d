"""Waypoint trajectories and the geometry/timing substrate.

Everything downstream (subject simulation, safety checks, imitation,
evaluation) trades in the `Trajectory` type defined here: an ordered,
strictly time-increasing sequence of end-effector waypoints with an
optional gripper-aperture channel. Interpolation is piecewise linear
throughout so that resampling, velocity bounds, and test oracles stay
exact.

The module also holds the positional error metrics used to score a
learned trajectory against a reference (`rmse`, `band_fraction`) and the
kinematic limit checker (`check_limits`) that the safety layer relies on.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .safety import SafetyConfig

Vec3 = tuple[float, float, float]

# Absolute slack (seconds / meters) for grid snapping and continuity checks.
_EPS = 1e-9


def _as_vec3(value: Sequence[float], name: str = "vector") -> Vec3:
    arr = tuple(float(v) for v in value)
    if len(arr) != 3:
        raise ValueError(f"{name} must have exactly 3 components, got {len(arr)}")
    if not all(math.isfinite(v) for v in arr):
        raise ValueError(f"{name} components must be finite, got {arr}")
    return arr  # type: ignore[return-value]


@dataclass(frozen=True)
class Waypoint:
    """A timed end-effector sample: position in meters, optional grip in [0, 1]."""

    t: float
    pos: Vec3
    grip: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t) and self.t >= 0):
            raise ValueError(f"waypoint time must be finite and >= 0, got {self.t}")
        object.__setattr__(self, "pos", _as_vec3(self.pos, "pos"))
        if self.grip is not None:
            g = float(self.grip)
            if not (math.isfinite(g) and 0.0 <= g <= 1.0):
                raise ValueError(f"grip must be in [0, 1], got {self.grip}")
            object.__setattr__(self, "grip", g)


@dataclass(frozen=True)
class Box:
    """Axis-aligned workspace box (meters), lo < hi componentwise."""

    lo: Vec3
    hi: Vec3

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", _as_vec3(self.lo, "lo"))
        object.__setattr__(self, "hi", _as_vec3(self.hi, "hi"))
        if not all(l < h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"box must satisfy lo < hi componentwise, got {self.lo} / {self.hi}")

    @classmethod
    def cube(cls, side: float, center: Sequence[float] = (0.0, 0.0, 0.0)) -> Box:
        h = side / 2.0
        c = _as_vec3(center, "center")
        return cls(tuple(x - h for x in c), tuple(x + h for x in c))  # type: ignore[arg-type]

    def contains(self, pos: Sequence[float]) -> bool:
        return all(l <= p <= h for p, l, h in zip(pos, self.lo, self.hi))

    def exceedance(self, pos: Sequence[float]) -> float:
        """Largest componentwise distance outside the box; 0.0 when inside."""
        worst = 0.0
        for p, l, h in zip(pos, self.lo, self.hi):
            if p < l:
                worst = max(worst, l - p)
            elif p > h:
                worst = max(worst, p - h)
        return worst


class ViolationKind(Enum):
    WORKSPACE = "workspace"
    VELOCITY = "velocity"
    ACCELERATION = "acceleration"


@dataclass(frozen=True)
class LimitViolation:
    """One kinematic-limit breach: which limit, at which sample, by how much."""

    kind: ViolationKind
    index: int
    magnitude: float

    def __post_init__(self) -> None:
        if not self.magnitude > 0:
            raise ValueError(f"violation magnitude must be > 0, got {self.magnitude}")


@dataclass(frozen=True)
class Trajectory:
    """Ordered waypoint sequence in one fixed reference frame.

    Invariants enforced at construction: at least two waypoints, strictly
    increasing timestamps, and a grip channel that is either present on
    every waypoint or absent from all of them.
    """

    waypoints: tuple[Waypoint, ...]
    frame: str = "world"

    def __post_init__(self) -> None:
        wps = tuple(self.waypoints)
        object.__setattr__(self, "waypoints", wps)
        if len(wps) < 2:
            raise ValueError(f"trajectory needs >= 2 waypoints, got {len(wps)}")
        for a, b in zip(wps, wps[1:]):
            if not b.t > a.t:
                raise ValueError(f"waypoint times must be strictly increasing ({a.t} -> {b.t})")
        has_grip = wps[0].grip is not None
        if any((w.grip is not None) != has_grip for w in wps):
            raise ValueError("grip must be present on all waypoints or on none")

    # -- array views -------------------------------------------------------

    def times(self) -> np.ndarray:
        return np.array([w.t for w in self.waypoints], dtype=float)

    def positions(self) -> np.ndarray:
        return np.array([w.pos for w in self.waypoints], dtype=float)

    def grips(self) -> np.ndarray | None:
        if not self.has_grip:
            return None
        return np.array([w.grip for w in self.waypoints], dtype=float)

    @property
    def has_grip(self) -> bool:
        return self.waypoints[0].grip is not None

    @property
    def duration(self) -> float:
        return self.waypoints[-1].t - self.waypoints[0].t

    def __len__(self) -> int:
        return len(self.waypoints)

    # -- constructors and geometric transforms ------------------------------

    @classmethod
    def from_arrays(
        cls,
        times: Iterable[float],
        positions: Iterable[Sequence[float]],
        grips: Iterable[float] | None = None,
        frame: str = "world",
    ) -> Trajectory:
        t = list(times)
        p = list(positions)
        g: list[float | None] = list(grips) if grips is not None else [None] * len(t)
        if not (len(t) == len(p) == len(g)):
            raise ValueError("times, positions, and grips must have equal lengths")
        return cls(tuple(Waypoint(float(ti), _as_vec3(pi), gi) for ti, pi, gi in zip(t, p, g)), frame)

    def translated(self, offset: Sequence[float]) -> Trajectory:
        off = _as_vec3(offset, "offset")
        return Trajectory(
            tuple(
                Waypoint(w.t, (w.pos[0] + off[0], w.pos[1] + off[1], w.pos[2] + off[2]), w.grip)
                for w in self.waypoints
            ),
            self.frame,
        )

    def scaled_about(self, center: Sequence[float], factor: float) -> Trajectory:
        """Scale every position about `center` by `factor`; timing and grip unchanged."""
        c = _as_vec3(center, "center")
        return Trajectory(
            tuple(
                Waypoint(
                    w.t,
                    tuple(c[i] + factor * (w.pos[i] - c[i]) for i in range(3)),  # type: ignore[arg-type]
                    w.grip,
                )
                for w in self.waypoints
            ),
            self.frame,
        )


def time_grid(t0: float, t1: float, dt: float) -> np.ndarray:
    """Sample times t0, t0+dt, ... through t1, with t1 always included exactly.

    When (t1 - t0) is not an integer multiple of dt the final step is
    shorter than dt; when the last grid point lands within 1 ns of t1 it
    is snapped onto t1 so endpoints are preserved bit-exactly.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    n = int(math.floor((t1 - t0) / dt + _EPS))
    grid = t0 + dt * np.arange(n + 1, dtype=float)
    if t1 - grid[-1] > _EPS:
        grid = np.append(grid, t1)
    else:
        grid[-1] = t1
    grid[0] = t0
    return grid


def resample(traj: Trajectory, dt: float) -> Trajectory:
    """Resample onto a uniform dt grid by linear interpolation.

    Endpoints are preserved exactly; interior samples interpolate the
    bracketing waypoints. Idempotent: resampling a resampled trajectory
    at the same dt reproduces it.
    """
    t = traj.times()
    grid = time_grid(float(t[0]), float(t[-1]), dt)
    pos = traj.positions()
    out = np.column_stack([np.interp(grid, t, pos[:, i]) for i in range(3)])
    grips = traj.grips()
    g = np.interp(grid, t, grips) if grips is not None else None
    return Trajectory.from_arrays(grid, out, g, traj.frame)


def _paired_positions(pred: Trajectory, ref: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    if len(pred) != len(ref):
        raise ValueError(f"trajectories must share the sample grid: {len(pred)} vs {len(ref)} samples")
    return pred.positions(), ref.positions()


def rmse(pred: Trajectory, ref: Trajectory) -> float:
    """Root-mean-square 3-D positional error over paired samples (grip excluded)."""
    p, r = _paired_positions(pred, ref)
    return float(np.sqrt(np.mean(np.sum((p - r) ** 2, axis=1))))


def band_fraction(pred: Trajectory, ref: Trajectory, radius: float) -> float:
    """Fraction of samples within `radius` meters of the paired reference sample."""
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    p, r = _paired_positions(pred, ref)
    dist = np.linalg.norm(p - r, axis=1)
    return float(np.mean(dist <= radius))


def check_limits(traj: Trajectory, cfg: "SafetyConfig") -> list[LimitViolation]:
    """Check a fixed-dt trajectory against workspace, velocity, and acceleration limits.

    Velocities are consecutive-pair finite differences attributed to the
    later sample; accelerations are second differences attributed to the
    middle sample. An empty list means the trajectory is safe under `cfg`.
    """
    t = traj.times()
    pos = traj.positions()
    violations: list[LimitViolation] = []

    for i, p in enumerate(pos):
        exc = cfg.workspace.exceedance(p)
        if exc > 0:
            violations.append(LimitViolation(ViolationKind.WORKSPACE, i, exc))

    dts = np.diff(t)
    vel = np.diff(pos, axis=0) / dts[:, None]
    speed = np.linalg.norm(vel, axis=1)
    for i, s in enumerate(speed):
        if s > cfg.v_max:
            violations.append(LimitViolation(ViolationKind.VELOCITY, i + 1, float(s - cfg.v_max)))

    if len(vel) >= 2:
        mid_dt = (t[2:] - t[:-2]) / 2.0
        acc = np.diff(vel, axis=0) / mid_dt[:, None]
        mag = np.linalg.norm(acc, axis=1)
        for i, a in enumerate(mag):
            if a > cfg.a_max:
                violations.append(LimitViolation(ViolationKind.ACCELERATION, i + 1, float(a - cfg.a_max)))

    violations.sort(key=lambda v: (v.index, v.kind.value))
    return violations


def concatenate(segments: Sequence[Trajectory], tol: float = 1e-6) -> Trajectory:
    """Chain segments end-to-start into one trajectory.

    Each segment must begin (within `tol` meters) where the previous one
    ended; segment-local times are shifted so the chain is continuous in
    time as well. Grip presence must be uniform across segments.
    """
    if not segments:
        raise ValueError("no segments to concatenate")
    if len(segments) == 1:
        return segments[0]
    waypoints: list[Waypoint] = list(segments[0].waypoints)
    for seg in segments[1:]:
        prev_end = waypoints[-1]
        head = seg.waypoints[0]
        gap = math.dist(prev_end.pos, head.pos)
        if gap > tol:
            raise ValueError(f"segments do not chain continuously (gap {gap:.2e} m > {tol:.0e} m)")
        shift = prev_end.t - head.t
        waypoints.extend(Waypoint(w.t + shift, w.pos, w.grip) for w in seg.waypoints[1:])
    return Trajectory(tuple(waypoints), segments[0].frame)


# -- file formats -----------------------------------------------------------
#
# JSON:  { "frame": str, "dt_hint": number|null,
#          "waypoints": [{"t": s, "x": m, "y": m, "z": m, "grip": 0..1?}, ...] }
# CSV:   header t,x,y,z[,grip]


def trajectory_to_dict(traj: Trajectory, dt_hint: float | None = None) -> dict:
    wps = []
    for w in traj.waypoints:
        row: dict = {"t": w.t, "x": w.pos[0], "y": w.pos[1], "z": w.pos[2]}
        if w.grip is not None:
            row["grip"] = w.grip
        wps.append(row)
    return {"frame": traj.frame, "dt_hint": dt_hint, "waypoints": wps}


def trajectory_from_dict(data: dict) -> Trajectory:
    try:
        rows = data["waypoints"]
    except (KeyError, TypeError):
        raise ValueError("trajectory JSON must contain a 'waypoints' list") from None
    wps = tuple(
        Waypoint(float(r["t"]), (float(r["x"]), float(r["y"]), float(r["z"])),
                 float(r["grip"]) if "grip" in r and r["grip"] is not None else None)
        for r in rows
    )
    return Trajectory(wps, str(data.get("frame", "world")))


def save_trajectory(traj: Trajectory, path: str | Path, dt_hint: float | None = None) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["t", "x", "y", "z"] + (["grip"] if traj.has_grip else [])
            writer.writerow(header)
            for w in traj.waypoints:
                row = [repr(w.t), repr(w.pos[0]), repr(w.pos[1]), repr(w.pos[2])]
                if traj.has_grip:
                    row.append(repr(w.grip))
                writer.writerow(row)
    else:
        path.write_text(json.dumps(trajectory_to_dict(traj, dt_hint), indent=2) + "\n")


def load_trajectory(path: str | Path) -> Trajectory:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"t", "x", "y", "z"} <= set(reader.fieldnames):
                raise ValueError(f"{path}: CSV trajectory needs header t,x,y,z[,grip]")
            has_grip = "grip" in reader.fieldnames
            wps = tuple(
                Waypoint(
                    float(r["t"]),
                    (float(r["x"]), float(r["y"]), float(r["z"])),
                    float(r["grip"]) if has_grip and r["grip"] not in (None, "") else None,
                )
                for r in reader
            )
        return Trajectory(wps)
    return trajectory_from_dict(json.loads(path.read_text()))
