"""Grip-site perception stub.

Stands in for the vision system that localizes where the hand should
engage the end effector. Observations are the true site plus seeded
Gaussian noise; confidence decays with the configured noise level and
drops to zero when the site is occluded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .trajectory import Vec3, _as_vec3

CONFIDENCE_REFERENCE_SIGMA = 0.01  # 1 cm of noise costs a factor of e
MIN_START_CONFIDENCE = 0.5


@dataclass(frozen=True)
class GripSiteObservation:
    t: float
    pos: Vec3
    confidence: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "pos", _as_vec3(self.pos, "pos"))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


class GripSiteLocator:
    """Seeded noisy observer of a (possibly moving) grip site."""

    def __init__(self, noise_sigma: float = 0.0, seed: int = 0) -> None:
        if noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
        self.noise_sigma = noise_sigma
        self._rng = np.random.default_rng(seed)
        self.confidence = 1.0 if noise_sigma == 0 else float(np.exp(-noise_sigma / CONFIDENCE_REFERENCE_SIGMA))

    def observe(self, true_pos: Vec3, t: float, occluded: bool = False) -> GripSiteObservation:
        if occluded:
            # Position is reported but must not be trusted downstream.
            return GripSiteObservation(t, true_pos, 0.0)
        noise = self._rng.normal(0.0, self.noise_sigma, 3) if self.noise_sigma > 0 else np.zeros(3)
        pos = tuple(float(p + n) for p, n in zip(true_pos, noise))
        return GripSiteObservation(t, pos, self.confidence)


def select_start_point(observations: Sequence[GripSiteObservation]) -> GripSiteObservation:
    """Latest observation trustworthy enough to start a pass from.

    Raises ValueError when nothing reaches the confidence floor, so a
    fully occluded window can never silently start a session.
    """
    for obs in reversed(observations):
        if obs.confidence >= MIN_START_CONFIDENCE:
            return obs
    raise ValueError(
        f"no observation with confidence >= {MIN_START_CONFIDENCE} "
        f"among {len(observations)} observations"
    )


def save_observations(observations: Sequence[GripSiteObservation], path: str | Path) -> None:
    with Path(path).open("w") as fh:
        for obs in observations:
            fh.write(json.dumps({"t": obs.t, "pos": list(obs.pos), "confidence": obs.confidence}))
            fh.write("\n")


def load_observations(path: str | Path) -> list[GripSiteObservation]:
    out = []
    with Path(path).open() as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                out.append(GripSiteObservation(float(row["t"]), tuple(row["pos"]), float(row["confidence"])))
    return out


def replay(path: str | Path) -> Iterator[GripSiteObservation]:
    yield from load_observations(path)
