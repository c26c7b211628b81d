"""Command-line entry points.

rehab run         run one scripted session and persist its artifacts
rehab evaluate    score a trained policy against an expert trajectory
rehab emg-report  condition measurement channels and summarize %MVIC
rehab serve       expose the live-session HTTP API
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .emg import process_manifest, report_to_dict, write_report_csv
from .imitation import EmergencyStopAborted, Policy, evaluate_policy
from .session import SessionConfig, run_scripted_session
from .subject import load_profile
from .tasks import TASK_IDS
from .trajectory import load_trajectory


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rehab",
        description="Desk-scale simulator for adaptive cobot rehabilitation training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scripted training session")
    run.add_argument("--task", required=True, choices=TASK_IDS)
    run.add_argument("--profile", required=True, type=Path, help="subject profile JSON")
    run.add_argument("--stage", required=True, type=int, choices=(1, 2, 3))
    run.add_argument("--seed", required=True, type=int)
    run.add_argument("--out", required=True, type=Path, help="output directory for session artifacts")
    run.add_argument("--intervals", type=int, default=1, help="training intervals to run (default 1)")
    run.add_argument("--interval-s", type=float, default=None, help="override interval length in seconds")
    run.add_argument("--rest-s", type=float, default=None, help="override rest length in seconds")
    run.add_argument("--dt", type=float, default=0.05, help="control tick in seconds (default 0.05)")
    run.add_argument("--max-adjustments", type=int, default=20)

    ev = sub.add_parser("evaluate", help="score a policy file against an expert trajectory file")
    ev.add_argument("--policy", required=True, type=Path)
    ev.add_argument("--expert", required=True, type=Path, help="trajectory JSON or CSV")

    emg = sub.add_parser("emg-report", help="process a measurement-channel manifest into %%MVIC reports")
    emg.add_argument("--manifest", required=True, type=Path)
    emg.add_argument("--out", type=Path, default=None, help="directory for report files (default: stdout)")

    srv = sub.add_parser("serve", help="serve the live-session HTTP API")
    srv.add_argument("--bind", default="127.0.0.1:8000", help="HOST:PORT (default 127.0.0.1:8000)")
    srv.add_argument("--data", required=True, type=Path, help="directory for session artifacts")
    srv.add_argument("--pace", type=float, default=None,
                     help="wall seconds per control tick (default: dt; 0 free-runs)")

    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    cfg = SessionConfig(
        task_id=args.task,
        stage=args.stage,
        seed=args.seed,
        dt=args.dt,
        n_intervals=args.intervals,
        interval_s=args.interval_s,
        rest_s=args.rest_s,
        max_adjustments=args.max_adjustments,
    )
    try:
        record, _, policy = run_scripted_session(cfg, profile, out_dir=args.out)
    except EmergencyStopAborted as exc:
        print(f"session aborted: {exc}", file=sys.stderr)
        for tr in exc.transitions:
            print(tr.to_json_line(), file=sys.stderr)
        return 3
    print(f"session {record.session_id}: task={record.task_id} stage={record.safety_stage} seed={record.seed}")
    print(
        f"  converged={record.converged} adjustments={record.adjustments} "
        f"iterations={record.iterations} rows={record.rows}"
    )
    if record.evaluation is not None:
        print(
            f"  policy rmse {record.evaluation['rmse_m']:.4f} m, "
            f"band(2cm) {record.evaluation['band_fraction']:.3f}"
        )
    elif policy is None:
        print("  too few acceptable states to train a policy", file=sys.stderr)
    print(f"  artifacts: {Path(args.out) / record.session_id}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    policy = Policy.load(args.policy)
    expert = load_trajectory(args.expert)
    metrics = evaluate_policy(policy, expert)
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


def _cmd_emg_report(args: argparse.Namespace) -> int:
    reports = process_manifest(args.manifest)
    ordered = [reports[c] for c in sorted(reports, key=lambda c: c.value)]
    if args.out is None:
        print(json.dumps([report_to_dict(r) for r in ordered], indent=2, sort_keys=True))
        return 0
    args.out.mkdir(parents=True, exist_ok=True)
    json_path = args.out / "activation_report.json"
    json_path.write_text(json.dumps([report_to_dict(r) for r in ordered], indent=2, sort_keys=True) + "\n")
    write_report_csv(ordered, args.out / "activation_report.csv")
    print(f"wrote {json_path} and {json_path.with_suffix('.csv')}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    args.data.mkdir(parents=True, exist_ok=True)
    serve(args.bind, args.data, default_pace=args.pace)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "evaluate": _cmd_evaluate,
        "emg-report": _cmd_emg_report,
        "serve": _cmd_serve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
