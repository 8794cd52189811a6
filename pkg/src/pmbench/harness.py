"""Benchmark harness: iterate episodes, run an agent, write standardized
outputs (trades.jsonl, equity.csv, metrics.json, warnings.log), a run
manifest, and aggregate metrics. Episode-level parallelism only; all
output files are written atomically (temp + rename)."""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .agents import make_agent
from .bridge import host_agent
from .episodes import load_episode
from .errors import MissingRun, PMBenchError
from .metrics import aggregate, compute_metrics
from .simulator import EpisodeResult, SimConfig, run_episode
from .units import MICRO_PER_USD


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class TrajectoryLogger:
    """Durable step-trajectory log: buffers step records and checkpoints
    (append + flush + fsync) every `every_n_steps`, so a crash loses at
    most that many steps."""

    def __init__(self, path, every_n_steps: int = 50):
        self.path = Path(path)
        self.every_n_steps = max(1, every_n_steps)
        self._buffer: list = []
        self._current: Optional[dict] = None
        self._steps_since_flush = 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")

    def start_step(self, step_index: int, now_ts: int, summary: dict):
        self._current = {
            "step_index": step_index,
            "now_ts": now_ts,
            "summary": summary,
            "tool_calls": [],
        }

    def tool(self, tool: str, args: dict, result, error=None):
        if self._current is None:
            return
        self._current["tool_calls"].append({
            "tool": tool,
            "args": args,
            "result": result,
            "error": None if error is None else type(error).__name__,
        })

    def end_step(self, step_index: int):
        if self._current is None:
            return
        self._buffer.append(_dump(self._current))
        self._current = None
        self._steps_since_flush += 1
        if self._steps_since_flush >= self.every_n_steps:
            self.flush()

    def flush(self):
        if self._buffer:
            self._fh.write("".join(line + "\n" for line in self._buffer))
            self._buffer.clear()
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._steps_since_flush = 0

    def close(self):
        self.flush()
        self._fh.close()


@dataclass(frozen=True)
class RunSpec:
    """Everything determinism-relevant about a run, plus output location."""
    episodes_dir: str
    agent: str
    out_dir: str
    cadence_s: int = 300
    equity_sample_s: int = 60
    max_tool_rounds: int = 3
    seed: int = 0
    execution_mode: Optional[str] = None
    parallel: int = 1
    agent_cmd: Optional[str] = None     # for --agent bridge
    bridge_timeout_s: float = 60.0
    trajectory_every: int = 50

    def sim_config(self) -> SimConfig:
        return SimConfig(
            cadence_s=self.cadence_s,
            equity_sample_s=self.equity_sample_s,
            max_tool_rounds=self.max_tool_rounds,
            rng_seed=self.seed,
            execution_mode=self.execution_mode,
        )

    def config_hash(self) -> str:
        payload = {
            "agent": self.agent,
            "agent_cmd": self.agent_cmd,
            "cadence_s": self.cadence_s,
            "equity_sample_s": self.equity_sample_s,
            "max_tool_rounds": self.max_tool_rounds,
            "seed": self.seed,
            "execution_mode": self.execution_mode,
            "engine_version": __version__,
        }
        return hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def discover_episodes(episodes_dir) -> list:
    root = Path(episodes_dir)
    if not root.is_dir():
        raise MissingRun(f"episodes dir {root} does not exist")
    dirs = sorted(p for p in root.iterdir()
                  if p.is_dir() and (p / "metadata.json").is_file())
    if not dirs:
        raise MissingRun(f"no episode directories under {root}")
    return dirs


def _build_agent(spec: RunSpec):
    if spec.agent == "bridge":
        if not spec.agent_cmd:
            raise PMBenchError("--agent bridge requires --agent-cmd")
        return host_agent(spec.agent_cmd, timeout_s=spec.bridge_timeout_s)
    return make_agent(spec.agent)


def write_episode_outputs(out_dir: Path, result: EpisodeResult, metrics):
    out_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write(out_dir / "trades.jsonl",
                  "".join(_dump(rec) + "\n" for rec in result.trade_log))
    equity_lines = ["ts_ms,equity_micro_usd"]
    equity_lines += [f"{s.ts},{s.equity}" for s in result.equity_samples]
    _atomic_write(out_dir / "equity.csv", "\n".join(equity_lines) + "\n")
    _atomic_write(out_dir / "metrics.json",
                  json.dumps(metrics.to_json_obj(), indent=2) + "\n")
    _atomic_write(out_dir / "warnings.log",
                  "".join(w + "\n" for w in result.warnings))


def run_one_episode(spec: RunSpec, episode_dir: str) -> dict:
    """Load, run, write one episode; returns a manifest entry."""
    episode = load_episode(episode_dir)
    agent = _build_agent(spec)
    out_sub = Path(spec.out_dir) / episode.metadata.episode_id
    trajectory = TrajectoryLogger(out_sub / "trajectory.jsonl",
                                  every_n_steps=spec.trajectory_every)
    out_sub.mkdir(parents=True, exist_ok=True)
    try:
        result = run_episode(episode, agent, spec.sim_config(),
                             agent_name=spec.agent, trajectory=trajectory)
    finally:
        trajectory.close()
    metrics = compute_metrics(
        result.equity_curve, result.fills, result.order_records,
        episode.metadata.bankroll,
        warnings=len(result.warnings))
    write_episode_outputs(out_sub, result, metrics)
    timed_out = bool(getattr(agent, "timed_out", False))
    return {
        "episode_id": episode.metadata.episode_id,
        "episode_dir": str(episode_dir),
        "out_dir": str(out_sub),
        "aborted": result.aborted,
        "error": result.error,
        "decision_steps": result.decision_steps,
        "reproducible": not timed_out,
        "metrics": metrics.to_json_obj(),
        "_metrics_obj": metrics,
    }


def _run_one_episode_worker(args):
    spec_dict, episode_dir = args
    return run_one_episode(RunSpec(**spec_dict), episode_dir)


def run_benchmark(spec: RunSpec) -> dict:
    """Run the agent over every episode; returns the manifest object."""
    episode_dirs = discover_episodes(spec.episodes_dir)
    out_root = Path(spec.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    started = time.time()

    if spec.parallel > 1:
        spec_dict = {f: getattr(spec, f) for f in spec.__dataclass_fields__}
        with ProcessPoolExecutor(max_workers=spec.parallel) as pool:
            entries = list(pool.map(
                _run_one_episode_worker,
                [(spec_dict, str(d)) for d in episode_dirs]))
    else:
        entries = [run_one_episode(spec, str(d)) for d in episode_dirs]

    per_episode = [e.pop("_metrics_obj") for e in entries]
    agg = aggregate(per_episode)
    _atomic_write(out_root / "metrics.json",
                  json.dumps(agg.to_json_obj(), indent=2) + "\n")

    manifest = {
        "run_id": f"run-{spec.config_hash()}",
        "engine_version": __version__,
        "agent": spec.agent,
        "agent_cmd": spec.agent_cmd,
        "config_hash": spec.config_hash(),
        "sim_config": {
            "cadence_s": spec.cadence_s,
            "equity_sample_s": spec.equity_sample_s,
            "max_tool_rounds": spec.max_tool_rounds,
            "seed": spec.seed,
            "execution_mode": spec.execution_mode,
        },
        "episode_ids": [e["episode_id"] for e in entries],
        "episodes": entries,
        "reproducible": all(e["reproducible"] for e in entries),
        "wall_clock_started": started,
        "wall_clock_finished": time.time(),
    }
    _atomic_write(out_root / "manifest.json",
                  json.dumps(manifest, indent=2) + "\n")
    return manifest


# --- reporting ---------------------------------------------------------------

REPORT_COLUMNS = ("Episode", "PnL ($)", "Return (%)", "Max DD (%)",
                  "Contracts", "Fill (%)")


def _report_row(name: str, m: dict) -> list:
    return [
        name,
        f"{m['pnl_micro_usd'] / MICRO_PER_USD:+.2f}",
        f"{float(m['return_pct']):+.2f}",
        f"{float(m['max_drawdown_pct']):.2f}",
        str(m["contracts_traded"]),
        f"{float(m['fill_ratio_pct']):.1f}",
    ]


def report(run_dir) -> str:
    """Human-readable per-episode + Total table from a completed run.

    Every number is read straight from the run's metrics.json files."""
    root = Path(run_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise MissingRun(f"{root} has no manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    rows = [list(REPORT_COLUMNS)]
    for episode_id in manifest["episode_ids"]:
        m = json.loads((root / episode_id / "metrics.json")
                       .read_text(encoding="utf-8"))
        rows.append(_report_row(episode_id, m))
    agg = json.loads((root / "metrics.json").read_text(encoding="utf-8"))
    rows.append(_report_row("Total", agg))

    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for idx, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])]
        cells += [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
        if idx == 0 or idx == len(rows) - 2:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return "\n".join(lines) + "\n"


def report_csv(run_dir) -> str:
    """Plot-friendly CSV of the same report values."""
    root = Path(run_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise MissingRun(f"{root} has no manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    lines = ["episode,pnl_usd,return_pct,max_dd_pct,contracts,fill_pct"]
    names = list(manifest["episode_ids"]) + ["Total"]
    for name in names:
        path = (root / "metrics.json" if name == "Total"
                else root / name / "metrics.json")
        m = json.loads(path.read_text(encoding="utf-8"))
        lines.append(",".join(_report_row(name, m)))
    return "\n".join(lines) + "\n"
