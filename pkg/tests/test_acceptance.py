"""System-level acceptance checks.

One test per headline capability, each reported as an
ACCEPTANCE: <name>: PASSED/FAILED line in the terminal summary:

  * policy_fidelity             learned policy tracks a held-out expert
  * emergency_stop_reaction     force cap halts motion the same tick, latches
  * personalization_convergence guided iterations adapt to the subject's ROM
  * activation_tracks_excursion surrogate activation drops with smaller motion
  * emg_pipeline_accuracy       envelope, filtering, and scaling tolerances
  * interval_rest_scheduling    training/rest cadence over an accelerated run
  * deterministic_replay        identical seeds reproduce artifacts byte for byte
"""

from __future__ import annotations

import json
import math
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from cobot_rehab import (
    Command,
    CommandRejected,
    EmgRecord,
    ForceReading,
    Label,
    Mode,
    SafetyMonitor,
    ScriptedExpert,
    SessionConfig,
    SubjectProfile,
    SubjectSimulator,
    Trajectory,
    Waypoint,
    evaluate_policy,
    get_task,
    normalized_depth,
    pct_mvic,
    remove_ecg,
    rms_envelope,
    run_scripted_session,
    run_session,
    stage_defaults,
    surrogate_activation,
)
from cobot_rehab.emg import TaskKind, default_surrogates
from cobot_rehab.subject import save_profile

PERMISSIVE = SubjectProfile(
    rom_center=(0.0, 0.0, 0.0),
    rom_radii=(5.0, 5.0, 5.0),
    stiffness_k=100.0,
    comfort_margin=0.9,
    stop_threshold=10.0,
)


def test_policy_fidelity() -> None:
    """A policy trained from one clean session reproduces the expert motion
    within 2 cm rmse and keeps at least 95% of samples inside a 2 cm band,
    measured against a perturbed held-out reference, not the training rows."""
    cfg = SessionConfig(
        task_id="gross", stage=1, seed=1, dt=0.05, interval_s=70.0, locator_sigma=0.0
    )
    record, _, policy = run_scripted_session(cfg, PERMISSIVE)
    assert record.converged
    assert policy is not None

    reference = get_task("gross").trajectory
    duration = reference.duration
    phases = (0.0, 2.1, 4.2)
    held_out = Trajectory(
        tuple(
            Waypoint(
                w.t,
                tuple(
                    p + 0.008 * math.sin(2 * math.pi * w.t / duration + phase)
                    for p, phase in zip(w.pos, phases)
                ),
            )
            for w in reference.waypoints
        )
    )
    metrics = evaluate_policy(policy, held_out, band_radius=0.02)
    assert metrics["rmse_m"] <= 2e-2
    assert metrics["band_fraction"] >= 0.95


def test_emergency_stop_reaction() -> None:
    """Ramping interaction force trips the emergency stop on the very tick
    the cap is reached (inclusive), motion stays frozen through arbitrary
    commands, and only Reset releases the latch."""
    cfg = stage_defaults(1)
    monitor = SafetyMonitor(cfg)
    pos = (0.0, 0.0, 0.0)
    monitor.tick(ForceReading((0.0, 0.0, 0.0)), pos, 0.0, Command.START)

    displacement = 0.0
    tripped_at = None
    t = 0.05
    for force in np.arange(0.5, 50.0 + 1e-9, 0.5):
        state = monitor.tick(ForceReading((float(force), 0.0, 0.0)), pos, t, None)
        if state.mode is Mode.EMERGENCY_STOP:
            tripped_at = float(force)
            break
        displacement += state.speed_scale * cfg.v_max * 0.05
        t += 0.05
    assert tripped_at == 45.0  # the cap itself must already trip
    latch = monitor.transitions[-1]
    assert latch.cause == "force"
    assert latch.force_n == 45.0

    frozen = 0.0
    rng = np.random.default_rng(0)
    commands = [None, Command.START, Command.STOP, Command.RESUME]
    for _ in range(1000):
        t += 0.05
        cmd = commands[int(rng.integers(len(commands)))]
        try:
            state = monitor.tick(ForceReading((60.0, 0.0, 0.0)), pos, t, cmd)
        except CommandRejected:
            state = monitor.state
        assert state.mode is Mode.EMERGENCY_STOP
        frozen += state.speed_scale * cfg.v_max * 0.05
    assert frozen == 0.0  # not approximately: zero displacement after the latch

    t += 0.05
    state = monitor.tick(ForceReading((0.0, 0.0, 0.0)), pos, t, Command.RESET)
    assert state.mode is Mode.IDLE


def convergence_scenario() -> tuple[Trajectory, SubjectProfile]:
    t = np.linspace(0.0, 40.0, 401)
    u = t / 40.0
    pos = np.stack(
        [0.16 * np.sin(np.pi * u), 0.032 * np.sin(2 * np.pi * u), np.zeros_like(u)], axis=1
    )
    trajectory = Trajectory.from_arrays(t, pos)
    profile = SubjectProfile(
        rom_center=(0.0, 0.0, 0.0),
        rom_radii=(0.08, 0.08, 0.08),
        stiffness_k=1500.0,
        comfort_margin=0.8,
        stop_threshold=5.0,
        noise_sigma=0.02,
    )
    return trajectory, profile


def test_personalization_convergence() -> None:
    """Across 100 subjects (seeds) whose reach is half the scripted motion,
    guided adjustment converges to a stop-free pass in at most 5 corrections,
    the personalized trajectory stays inside the subject's range, and each
    stopped pass contributes exactly one corrective label."""
    trajectory, base_profile = convergence_scenario()
    cfg = stage_defaults(1)
    for seed in range(100):
        profile = replace(base_profile, seed=seed)
        subject = SubjectSimulator(profile)
        expert = ScriptedExpert(
            gamma=0.8, anchor=(0.0, 0.0, 0.0), v_max=0.8 * cfg.v_max, dt=0.1
        )
        result = run_session(trajectory, subject, cfg, expert, dt=0.1, max_adjustments=20)
        assert result.converged, f"seed {seed} did not converge"
        assert result.adjustments <= 5, f"seed {seed} took {result.adjustments} adjustments"

        deepest = max(normalized_depth(w.pos, profile) for w in result.trajectory.waypoints)
        assert deepest <= 1.0, f"seed {seed} leaves the subject's range: {deepest}"

        for iteration in result.dataset.iterations:
            bad = [row for row in iteration.trace if row.label is Label.BAD]
            if iteration.stopped:
                assert len(bad) == 1 and iteration.trace[-1] is bad[0]
            else:
                assert bad == []
        final = result.dataset.iterations[-1]
        assert final.completed and not final.stopped


def test_activation_tracks_excursion() -> None:
    """For every surrogate muscle on both tasks, shrinking the motion to 60%
    of its size strictly lowers mean activation (interaction force held at
    zero so only the excursion term varies)."""
    for task_id, kind in (("gross", TaskKind.GROSS_ARM), ("fine", TaskKind.FINE_HAND)):
        full = get_task(task_id).trajectory
        center = tuple(np.mean([w.pos for w in full.waypoints], axis=0))
        reduced = full.scaled_about(center, 0.6)
        forces = [ForceReading((0.0, 0.0, 0.0), t=w.t) for w in full.waypoints]
        for model in default_surrogates(kind):
            assert model.excursion_gain > 0
            act_full = surrogate_activation(full, forces, model)
            act_reduced = surrogate_activation(reduced, forces, model)
            assert float(np.mean(act_reduced)) < float(np.mean(act_full)), model.muscle_id


def test_emg_pipeline_accuracy() -> None:
    """Envelope, drift removal, and normalization meet their numeric specs:
    sine rms within 1% of 1/sqrt(2), stopband loss >= 20 dB with passband
    loss <= 1 dB, and %MVIC invariant under common scaling."""
    fs = 2000.0
    t = np.arange(0, 2.0, 1.0 / fs)
    sine = EmgRecord("biceps-brachii", fs, np.sin(2 * np.pi * 10.0 * t))
    envelope = rms_envelope(sine, window=0.1).samples
    interior = envelope[200:-200]
    assert np.all(np.abs(interior - 1.0 / math.sqrt(2.0)) <= 0.01 / math.sqrt(2.0))

    fs = 1000.0
    n = 4000
    t = np.arange(n) / fs
    low = np.sin(2 * np.pi * 1.0 * t)  # drift/cardiac band
    high = np.sin(2 * np.pi * 80.0 * t)  # muscle band
    record = EmgRecord("biceps-brachii", fs, low + high)
    cleaned = remove_ecg(record, cutoff=30.0).samples
    spectrum_in = np.abs(np.fft.rfft(record.samples))
    spectrum_out = np.abs(np.fft.rfft(cleaned))
    bin_low = round(1.0 * n / fs)
    bin_high = round(80.0 * n / fs)
    loss_low_db = 20.0 * np.log10(spectrum_in[bin_low] / spectrum_out[bin_low])
    loss_high_db = 20.0 * np.log10(spectrum_in[bin_high] / spectrum_out[bin_high])
    assert loss_low_db >= 20.0
    assert loss_high_db <= 1.0

    rng = np.random.default_rng(7)
    for _ in range(1000):
        envelope = np.abs(rng.standard_normal(32)) + 1e-9
        mvic = float(rng.uniform(0.1, 500.0))
        scale = float(rng.uniform(1e-3, 1e3))
        base = pct_mvic(EmgRecord("m", 100.0, envelope), mvic)
        scaled = pct_mvic(EmgRecord("m", 100.0, scale * envelope), scale * mvic)
        assert np.allclose(scaled, base, rtol=1e-9, atol=0.0)


def test_interval_rest_scheduling() -> None:
    """An accelerated two-interval session rests exactly once, for the
    configured rest length, and trains for the configured interval length
    on both sides of the rest (all within one control tick)."""
    cfg = SessionConfig(
        task_id="gross",
        stage=1,
        seed=2,
        dt=0.01,
        n_intervals=2,
        interval_s=6.0,
        rest_s=0.5,
    )
    record, _, _ = run_scripted_session(cfg, PERMISSIVE)
    assert record.running_ticks == 1200

    transitions = [ev for ev in record.events if ev["kind"] == "transition"]
    spans = [
        (cur["to"], nxt["t"] - cur["t"]) for cur, nxt in zip(transitions, transitions[1:])
    ]
    spans.append((transitions[-1]["to"], record.duration_s - transitions[-1]["t"]))

    tick = cfg.dt + 1e-6  # tick quantization plus accumulated float error
    resting = [length for mode, length in spans if mode == "resting"]
    running = [length for mode, length in spans if mode == "running"]
    assert len(resting) == 1
    assert resting[0] == pytest.approx(0.5, abs=tick)
    assert len(running) == 2
    for length in running:
        assert length == pytest.approx(6.0, abs=tick)


def test_deterministic_replay(tmp_path) -> None:
    """Two fresh processes given the same task, profile, and seed emit byte
    identical datasets, transition logs, and policies."""
    profile = SubjectProfile(
        rom_center=(0.0, 0.0, 0.0),
        rom_radii=(0.05, 0.05, 0.05),
        stiffness_k=800.0,
        comfort_margin=0.7,
        stop_threshold=5.0,
        noise_sigma=0.02,
    )
    profile_path = tmp_path / "profile.json"
    save_profile(profile, profile_path)

    payloads = []
    for run in range(2):
        out = tmp_path / f"run{run}"
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "cobot_rehab.cli",
                "run",
                "--task",
                "fine",
                "--profile",
                str(profile_path),
                "--stage",
                "2",
                "--seed",
                "7",
                "--out",
                str(out),
                "--interval-s",
                "30",
                "--dt",
                "0.05",
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        session_dirs = list(out.iterdir())
        assert len(session_dirs) == 1
        target = session_dirs[0]
        record = json.loads((target / "record.json").read_text())
        record.pop("started_at")
        payloads.append(
            (
                target.name,
                (target / "dataset.jsonl").read_bytes(),
                (target / "transitions.jsonl").read_bytes(),
                (target / "policy.json").read_bytes(),
                record,
            )
        )
    assert payloads[0] == payloads[1]
