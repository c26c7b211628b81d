#!/usr/bin/env python3
"""Author the built-in task script data files.

The packaged tasks ship as CSV waypoint tables (phase,t_s,x,y,z[,grip]).
This script is how those tables were produced; rerun it only when the
choreography changes, then re-validate kinematic limits with the test
suite. Segments use a cosine ease between endpoints plus a sin^2 bulge
for out-of-line sweep; both have zero end slope, so phase seams are
velocity-continuous and pass acceleration checks at every safety stage.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

DT = 0.1
OUT = Path(__file__).resolve().parents[1] / "src" / "cobot_rehab" / "data"


def ease(u: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 - np.cos(np.pi * u))


def segment(
    name: str,
    p0,
    p1,
    duration: float,
    bulge,
    g0: float | None = None,
    g1: float | None = None,
    grip_hold_from: float | None = None,
):
    n = int(round(duration / DT)) + 1
    u = np.linspace(0.0, 1.0, n)
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    bulge = np.asarray(bulge, dtype=float)
    pos = p0 + ease(u)[:, None] * (p1 - p0) + (np.sin(np.pi * u) ** 2)[:, None] * bulge
    grip = None
    if g0 is not None:
        v = u if grip_hold_from is None else np.clip(u / grip_hold_from, 0.0, 1.0)
        grip = g0 + ease(v) * (g1 - g0)
    return name, u * duration, pos, grip


GROSS = [
    segment("backward-contraction", (0.10, 0.0, 0.0), (-0.08, 0.0, 0.03), 20.0, (0.0, 0.02, 0.01)),
    segment("forward-extension", (-0.08, 0.0, 0.03), (0.11, 0.03, 0.05), 20.0, (0.0, -0.02, 0.01)),
    segment("arm-swivel-stretch", (0.11, 0.03, 0.05), (0.0, 0.02, 0.0), 22.0, (0.02, 0.10, 0.0)),
]

FINE = [
    segment(
        "pick-up-with-guidance",
        (0.0, 0.0, 0.0),
        (0.07, 0.03, -0.03),
        16.0,
        (0.0, 0.0, 0.02),
        g0=0.10,
        g1=0.85,
    ),
    segment(
        "palm-open",
        (0.07, 0.03, -0.03),
        (0.04, -0.02, 0.02),
        16.0,
        (0.01, 0.0, 0.01),
        g0=0.85,
        g1=0.05,
    ),
    segment(
        "fist-hold",
        (0.04, -0.02, 0.02),
        (0.0, 0.0, 0.0),
        18.0,
        (0.0, 0.015, 0.0),
        g0=0.05,
        g1=0.90,
        grip_hold_from=0.4,
    ),
]


def write(path: Path, segments, with_grip: bool) -> None:
    header = ["phase", "t_s", "x", "y", "z"] + (["grip"] if with_grip else [])
    t_offset = 0.0
    prev_last: list | None = None
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for name, times, pos, grip in segments:
            for i in range(len(times)):
                row = [name, repr(round(float(t_offset + times[i]), 10))]
                if i == 0 and prev_last is not None:
                    # Seams repeat the previous phase's final waypoint exactly,
                    # so per-phase trajectories chain without numeric drift.
                    row += prev_last
                else:
                    row += [repr(float(v)) for v in pos[i]]
                    if with_grip:
                        row.append(repr(float(grip[i])))
                writer.writerow(row)
            prev_last = [repr(float(v)) for v in pos[-1]]
            if with_grip:
                prev_last.append(repr(float(grip[-1])))
            t_offset += times[-1]
    print(f"wrote {path}")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    write(OUT / "gross_arm_adl.csv", GROSS, with_grip=False)
    write(OUT / "fine_hand_finger.csv", FINE, with_grip=True)


if __name__ == "__main__":
    main()
