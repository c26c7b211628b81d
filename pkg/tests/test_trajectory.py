"""Tests for the trajectory substrate: resampling, metrics, limit checks, files."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cobot_rehab import (
    Box,
    SafetyConfig,
    Trajectory,
    ViolationKind,
    Waypoint,
    band_fraction,
    check_limits,
    concatenate,
    load_trajectory,
    resample,
    rmse,
    save_trajectory,
    time_grid,
)

WIDE_CFG = SafetyConfig(stage=3, workspace=Box.cube(10.0), v_max=100.0, a_max=1000.0)


def traj(points, grips=None) -> Trajectory:
    times = [float(i) for i in range(len(points))]
    return Trajectory.from_arrays(times, points, grips)


# -- hypothesis strategies ------------------------------------------------------

coords = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)
vec3 = st.tuples(coords, coords, coords)


@st.composite
def trajectories(draw, min_size: int = 2, max_size: int = 12) -> Trajectory:
    n = draw(st.integers(min_value=min_size, max_value=max_size))
    steps = draw(
        st.lists(
            st.floats(min_value=0.1, max_value=3.0, allow_nan=False),
            min_size=n - 1,
            max_size=n - 1,
        )
    )
    times = np.concatenate([[0.0], np.cumsum(steps)])
    pos = [draw(vec3) for _ in range(n)]
    return Trajectory.from_arrays(times, pos)


# -- construction invariants ----------------------------------------------------


class TestConstruction:
    def test_needs_two_waypoints(self) -> None:
        with pytest.raises(ValueError, match="2 waypoints"):
            Trajectory((Waypoint(0.0, (0, 0, 0)),))

    def test_times_strictly_increasing(self) -> None:
        with pytest.raises(ValueError, match="strictly increasing"):
            Trajectory.from_arrays([0.0, 0.0], [(0, 0, 0), (1, 0, 0)])

    def test_grip_presence_uniform(self) -> None:
        with pytest.raises(ValueError, match="grip"):
            Trajectory((Waypoint(0.0, (0, 0, 0), 0.5), Waypoint(1.0, (1, 0, 0), None)))

    def test_grip_bounds(self) -> None:
        with pytest.raises(ValueError, match="grip"):
            Waypoint(0.0, (0, 0, 0), 1.5)

    def test_negative_time_rejected(self) -> None:
        with pytest.raises(ValueError, match="finite and >= 0"):
            Waypoint(-1.0, (0, 0, 0))

    def test_nonfinite_position_rejected(self) -> None:
        with pytest.raises(ValueError, match="finite"):
            Waypoint(0.0, (math.nan, 0, 0))

    def test_box_requires_lo_below_hi(self) -> None:
        with pytest.raises(ValueError, match="lo < hi"):
            Box((0, 0, 0), (1, 0, 1))

    def test_box_exceedance(self) -> None:
        box = Box.cube(1.0)
        assert box.exceedance((0.0, 0.0, 0.0)) == 0.0
        assert box.exceedance((0.6, 0.0, 0.0)) == pytest.approx(0.1)
        assert box.contains((0.5, 0.5, 0.5))  # boundary inclusive
        assert not box.contains((0.5001, 0.0, 0.0))


# -- resample --------------------------------------------------------------------


class TestResample:
    def test_midpoint_sample(self) -> None:
        t = Trajectory.from_arrays([0.0, 1.0], [(0, 0, 0), (1, 0, 0)])
        out = resample(t, 0.5)
        assert out.waypoints[1].t == 0.5
        assert out.waypoints[1].pos == pytest.approx((0.5, 0.0, 0.0))

    def test_dt_equal_to_duration_gives_endpoints(self) -> None:
        t = Trajectory.from_arrays([0.0, 2.0], [(0, 0, 0), (1, 1, 0)])
        out = resample(t, 2.0)
        assert len(out) == 2
        assert out.waypoints[0].pos == t.waypoints[0].pos
        assert out.waypoints[-1].pos == t.waypoints[-1].pos

    def test_piecewise_segments(self) -> None:
        # Two unit segments resampled at dt=0.25: 9 samples, and the sample
        # at t=1.5 interpolates the second segment to (1, 0.5, 0).
        t = Trajectory.from_arrays([0.0, 1.0, 2.0], [(0, 0, 0), (1, 0, 0), (1, 1, 0)])
        out = resample(t, 0.25)
        assert len(out) == 9
        sample = out.waypoints[6]
        assert sample.t == 1.5
        assert sample.pos == pytest.approx((1.0, 0.5, 0.0))

    def test_final_time_preserved_when_not_multiple(self) -> None:
        t = Trajectory.from_arrays([0.0, 1.0], [(0, 0, 0), (1, 0, 0)])
        out = resample(t, 0.3)
        assert out.waypoints[-1].t == 1.0
        assert out.waypoints[-1].pos == pytest.approx((1.0, 0.0, 0.0))

    def test_grip_interpolated(self) -> None:
        t = Trajectory.from_arrays([0.0, 1.0], [(0, 0, 0), (1, 0, 0)], [0.0, 1.0])
        out = resample(t, 0.5)
        assert out.waypoints[1].grip == pytest.approx(0.5)

    def test_nonpositive_dt_rejected(self) -> None:
        t = Trajectory.from_arrays([0.0, 1.0], [(0, 0, 0), (1, 0, 0)])
        with pytest.raises(ValueError, match="dt"):
            resample(t, 0.0)

    @given(trajectories(), st.sampled_from([0.05, 0.1, 0.25, 0.5]))
    @settings(max_examples=50, deadline=None)
    def test_idempotent(self, t: Trajectory, dt: float) -> None:
        once = resample(t, dt)
        twice = resample(once, dt)
        assert np.allclose(once.times(), twice.times(), atol=1e-12)
        assert np.allclose(once.positions(), twice.positions(), atol=1e-12)


class TestTimeGrid:
    def test_endpoints_exact(self) -> None:
        grid = time_grid(0.0, 1.0, 0.3)
        assert grid[0] == 0.0
        assert grid[-1] == 1.0

    def test_uniform_spacing(self) -> None:
        grid = time_grid(0.0, 1.0, 0.25)
        assert np.allclose(np.diff(grid), 0.25)
        assert len(grid) == 5


# -- metrics ----------------------------------------------------------------------


class TestRmse:
    def test_identity_is_zero(self) -> None:
        t = traj([(0, 0, 0), (1, 0, 0), (2, 0, 0)])
        assert rmse(t, t) == 0.0

    def test_uniform_offset(self) -> None:
        t = traj([(0, 0, 0), (1, 0, 0), (2, 0, 0)])
        assert rmse(t, t.translated((0.01, 0.0, 0.0))) == pytest.approx(0.01)

    def test_two_sample_arithmetic(self) -> None:
        a = traj([(0, 0, 0), (1, 0, 0)])
        b = traj([(0.01, 0, 0), (1, 0.02, 0)])
        assert rmse(a, b) == pytest.approx(0.015811388300841896)

    def test_mismatched_lengths_rejected(self) -> None:
        with pytest.raises(ValueError, match="sample grid"):
            rmse(traj([(0, 0, 0), (1, 0, 0)]), traj([(0, 0, 0), (1, 0, 0), (2, 0, 0)]))

    @given(trajectories(), vec3)
    @settings(max_examples=50, deadline=None)
    def test_symmetric_and_translation_invariant(self, a: Trajectory, offset) -> None:
        b = a.scaled_about((0.0, 0.0, 0.0), 0.5)
        b = Trajectory.from_arrays(a.times(), b.positions())
        assert rmse(a, b) == pytest.approx(rmse(b, a))
        assert rmse(a.translated(offset), b.translated(offset)) == pytest.approx(
            rmse(a, b), abs=1e-9
        )

    def test_depends_only_on_paired_positions(self) -> None:
        a = traj([(0, 0, 0), (1, 0, 0)])
        b = traj([(0.01, 0, 0), (1, 0.02, 0)])
        relabeled_a = Trajectory.from_arrays([5.0, 9.0], a.positions())
        relabeled_b = Trajectory.from_arrays([5.0, 9.0], b.positions())
        assert rmse(relabeled_a, relabeled_b) == rmse(a, b)


class TestBandFraction:
    def test_identity_full(self) -> None:
        t = traj([(0, 0, 0), (1, 0, 0)])
        assert band_fraction(t, t, 0.001) == 1.0

    def test_all_outside(self) -> None:
        t = traj([(0, 0, 0), (1, 0, 0)])
        assert band_fraction(t, t.translated((0.03, 0, 0)), 0.02) == 0.0

    def test_counting(self) -> None:
        ref = traj([(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0)])
        pred = traj([(0.01, 0, 0), (1.01, 0, 0), (2.05, 0, 0), (3.05, 0, 0)])
        assert band_fraction(pred, ref, 0.02) == 0.5

    @given(trajectories(), st.floats(min_value=0.01, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_radius(self, a: Trajectory, radius: float) -> None:
        b = Trajectory.from_arrays(a.times(), a.positions() + 0.05)
        assert band_fraction(a, b, radius) <= band_fraction(a, b, radius * 2.0)


# -- limit checking ---------------------------------------------------------------


def brute_force_limits(t: Trajectory, cfg: SafetyConfig) -> list[tuple[str, int]]:
    """Independent per-sample re-check used as the oracle for check_limits."""
    found = []
    times = t.times()
    pos = t.positions()
    for i in range(len(t)):
        if cfg.workspace.exceedance(pos[i]) > 0:
            found.append(("workspace", i))
    for i in range(1, len(t)):
        v = math.dist(pos[i], pos[i - 1]) / (times[i] - times[i - 1])
        if v > cfg.v_max:
            found.append(("velocity", i))
    for i in range(1, len(t) - 1):
        v1 = (pos[i] - pos[i - 1]) / (times[i] - times[i - 1])
        v2 = (pos[i + 1] - pos[i]) / (times[i + 1] - times[i])
        a = np.linalg.norm((v2 - v1) / ((times[i + 1] - times[i - 1]) / 2.0))
        if a > cfg.a_max:
            found.append(("acceleration", i))
    return sorted(found, key=lambda v: (v[1], v[0]))


class TestCheckLimits:
    def test_safe_trajectory_is_clean(self) -> None:
        t = Trajectory.from_arrays([0.0, 10.0], [(0, 0, 0), (0.1, 0, 0)])
        assert check_limits(resample(t, 0.5), WIDE_CFG) == []

    def test_workspace_violation_magnitude(self) -> None:
        cfg = SafetyConfig(stage=1, workspace=Box.cube(1.0), v_max=100.0, a_max=1000.0)
        t = Trajectory.from_arrays([0.0, 1.0], [(0, 0, 0), (0.6, 0, 0)])
        violations = check_limits(t, cfg)
        assert len(violations) == 1
        assert violations[0].kind is ViolationKind.WORKSPACE
        assert violations[0].index == 1
        assert violations[0].magnitude == pytest.approx(0.1)

    def test_velocity_violation_magnitude(self) -> None:
        # 0.1 m in 0.25 s is 0.4 m/s; 0.2 m/s over the limit.
        cfg = SafetyConfig(stage=1, workspace=Box.cube(10.0), v_max=0.2, a_max=1000.0)
        t = Trajectory.from_arrays([0.0, 0.25], [(0, 0, 0), (0.1, 0, 0)])
        violations = check_limits(t, cfg)
        assert len(violations) == 1
        assert violations[0].kind is ViolationKind.VELOCITY
        assert violations[0].index == 1
        assert violations[0].magnitude == pytest.approx(0.2)

    def test_acceleration_violation(self) -> None:
        # Velocity flips +1 -> -1 over a 1 s middle window: acceleration 2.
        cfg = SafetyConfig(stage=1, workspace=Box.cube(10.0), v_max=10.0, a_max=1.0)
        t = Trajectory.from_arrays([0.0, 1.0, 2.0], [(0, 0, 0), (1, 0, 0), (0, 0, 0)])
        violations = check_limits(t, cfg)
        assert [v.kind for v in violations] == [ViolationKind.ACCELERATION]
        assert violations[0].index == 1
        assert violations[0].magnitude == pytest.approx(1.0)

    @given(trajectories(min_size=3))
    @settings(max_examples=50, deadline=None)
    def test_matches_brute_force(self, t: Trajectory) -> None:
        cfg = SafetyConfig(stage=2, workspace=Box.cube(6.0), v_max=2.0, a_max=4.0)
        got = [(v.kind.value, v.index) for v in check_limits(t, cfg)]
        assert got == brute_force_limits(t, cfg)


# -- concatenation -----------------------------------------------------------------


class TestConcatenate:
    def test_chains_and_rebases_time(self) -> None:
        a = Trajectory.from_arrays([0.0, 1.0], [(0, 0, 0), (1, 0, 0)])
        b = Trajectory.from_arrays([0.0, 2.0], [(1, 0, 0), (1, 1, 0)])
        joined = concatenate([a, b])
        assert len(joined) == 3
        assert joined.waypoints[-1].t == 3.0
        assert joined.waypoints[-1].pos == (1.0, 1.0, 0.0)

    def test_gap_rejected(self) -> None:
        a = Trajectory.from_arrays([0.0, 1.0], [(0, 0, 0), (1, 0, 0)])
        b = Trajectory.from_arrays([0.0, 1.0], [(1.1, 0, 0), (2, 0, 0)])
        with pytest.raises(ValueError, match="chain continuously"):
            concatenate([a, b])


# -- geometric transforms -----------------------------------------------------------


class TestTransforms:
    def test_translated(self) -> None:
        t = traj([(0, 0, 0), (1, 2, 3)])
        moved = t.translated((1, 1, 1))
        assert moved.waypoints[1].pos == (2.0, 3.0, 4.0)
        assert moved.times().tolist() == t.times().tolist()

    def test_scaled_about_center(self) -> None:
        t = traj([(1, 0, 0), (2, 0, 0)])
        scaled = t.scaled_about((1.0, 0.0, 0.0), 0.5)
        assert scaled.waypoints[0].pos == (1.0, 0.0, 0.0)
        assert scaled.waypoints[1].pos == (1.5, 0.0, 0.0)


# -- file formats --------------------------------------------------------------------


class TestFiles:
    def test_json_round_trip(self, tmp_path) -> None:
        t = Trajectory.from_arrays([0.0, 0.5, 1.0], [(0, 0, 0), (0.3, 0.1, 0), (1, 0, 0)], [0.0, 0.5, 1.0])
        path = tmp_path / "t.json"
        save_trajectory(t, path, dt_hint=0.05)
        loaded = load_trajectory(path)
        assert loaded.waypoints == t.waypoints
        assert json.loads(path.read_text())["dt_hint"] == 0.05

    def test_csv_round_trip(self, tmp_path) -> None:
        t = Trajectory.from_arrays([0.0, 1.0 / 3.0, 1.0], [(0, 0, 0), (0.1, 0.2, 0.3), (1, 0, 0)])
        path = tmp_path / "t.csv"
        save_trajectory(t, path)
        assert load_trajectory(path).waypoints == t.waypoints

    def test_csv_requires_header(self, tmp_path) -> None:
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            load_trajectory(path)

    def test_json_requires_waypoints(self, tmp_path) -> None:
        path = tmp_path / "bad.json"
        path.write_text("{}")
        with pytest.raises(ValueError, match="waypoints"):
            load_trajectory(path)
