"""Command-line harness: `pmbench run | synth | report`."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .episodes import SynthConfig, generate_synthetic, write_episode
from .errors import PMBenchError
from .harness import RunSpec, report, report_csv, run_benchmark
from .units import MICRO_PER_USD

AGENT_CHOICES = ("null", "random", "bollinger", "bridge")


def _default_out(sub: str) -> str:
    root = os.environ.get("PMBENCH_OUT", "pmbench_out")
    return str(Path(root) / sub)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmbench",
        description="Deterministic replay backtesting for binary "
                    "prediction-market contracts")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an agent over an episode set")
    p_run.add_argument("--episodes", required=True,
                       help="directory containing episode subdirectories")
    p_run.add_argument("--agent", required=True, choices=AGENT_CHOICES)
    p_run.add_argument("--agent-cmd",
                       help="external agent command (with --agent bridge)")
    p_run.add_argument("--cadence", type=int, default=300,
                       help="agent call cadence in seconds (default 300)")
    p_run.add_argument("--equity-interval", type=int, default=60,
                       help="equity sampling interval in seconds (default 60)")
    p_run.add_argument("--tool-rounds", type=int, default=3,
                       help="max tool rounds per step (default 3)")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--mode", choices=("maker_taker", "taker_only"),
                       help="override episode execution mode")
    p_run.add_argument("--out", default=None, help="output directory "
                       "(default $PMBENCH_OUT/run or pmbench_out/run)")
    p_run.add_argument("--parallel", type=int, default=1, metavar="K",
                       help="episode-level parallelism")
    p_run.add_argument("--bridge-timeout", type=float, default=60.0,
                       help="per-step wall-clock limit for bridge agents")
    p_run.add_argument("--checkpoint-every", type=int, default=50,
                       help="trajectory checkpoint interval in steps")

    p_synth = sub.add_parser("synth", help="generate synthetic episodes")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--episodes", type=int, default=1, metavar="K",
                         help="number of episodes to generate")
    p_synth.add_argument("--out", default=None)
    p_synth.add_argument("--tickers", type=int, default=2)
    p_synth.add_argument("--duration", type=int, default=3600,
                         help="episode duration in seconds")
    p_synth.add_argument("--book-period", type=int, default=10,
                         help="seconds between book snapshots")
    p_synth.add_argument("--trade-rate", type=float, default=6.0,
                         help="trade prints per minute per ticker")
    p_synth.add_argument("--spread", type=int, default=2, help="spread in cents")
    p_synth.add_argument("--depth", type=int, default=50,
                         help="contracts per displayed level")
    p_synth.add_argument("--vol", type=int, default=1,
                         help="max mid move per book step, cents")
    p_synth.add_argument("--bankroll-usd", type=int, default=1000)

    p_report = sub.add_parser("report", help="summarize a completed run")
    p_report.add_argument("--run", required=True, help="run output directory")
    p_report.add_argument("--csv", help="also write a plot-data CSV here")

    return parser


def _cmd_run(args) -> int:
    spec = RunSpec(
        episodes_dir=args.episodes,
        agent=args.agent,
        out_dir=args.out or _default_out("run"),
        cadence_s=args.cadence,
        equity_sample_s=args.equity_interval,
        max_tool_rounds=args.tool_rounds,
        seed=args.seed,
        execution_mode=args.mode,
        parallel=args.parallel,
        agent_cmd=args.agent_cmd,
        bridge_timeout_s=args.bridge_timeout,
        trajectory_every=args.checkpoint_every,
    )
    manifest = run_benchmark(spec)
    aborted = [e["episode_id"] for e in manifest["episodes"] if e["aborted"]]
    print(f"run {manifest['run_id']}: {len(manifest['episodes'])} episodes "
          f"-> {spec.out_dir}")
    if aborted:
        print(f"aborted episodes: {', '.join(aborted)}", file=sys.stderr)
        return 2
    return 0


def _cmd_synth(args) -> int:
    out_root = Path(args.out or _default_out("episodes"))
    for k in range(args.episodes):
        cfg = SynthConfig(
            seed=args.seed + k,
            n_tickers=args.tickers,
            duration_s=args.duration,
            book_update_period_s=args.book_period,
            trade_rate_per_min=args.trade_rate,
            spread_c=args.spread,
            depth_per_level=args.depth,
            vol_per_step_c=args.vol,
            bankroll=args.bankroll_usd * MICRO_PER_USD,
        )
        episode = generate_synthetic(cfg)
        write_episode(episode, out_root / episode.metadata.episode_id)
        print(f"wrote {out_root / episode.metadata.episode_id}")
    return 0


def _cmd_report(args) -> int:
    print(report(args.run), end="")
    if args.csv:
        Path(args.csv).write_text(report_csv(args.run), encoding="utf-8")
        print(f"csv written to {args.csv}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "synth":
            return _cmd_synth(args)
        return _cmd_report(args)
    except PMBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
