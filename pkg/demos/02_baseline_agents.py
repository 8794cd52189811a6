"""Run the built-in baseline agents over one synthetic episode and
compare their per-episode metrics.

Run: python3 demos/02_baseline_agents.py
"""

from pmbench.agents import make_agent
from pmbench.episodes import SynthConfig, generate_synthetic
from pmbench.metrics import compute_metrics
from pmbench.simulator import SimConfig, run_episode


def main():
    episode = generate_synthetic(SynthConfig(seed=7, n_tickers=2,
                                             duration_s=3600))
    # a 60 s cadence gives the agents 60 decision steps over the hour
    agents = {
        "null": make_agent("null"),
        "random": make_agent("random", trade_prob=0.5),
        "bollinger": make_agent("bollinger"),
    }
    print(f"{'agent':<10} {'pnl $':>9} {'return %':>9} {'max dd %':>9} "
          f"{'orders':>7} {'fills':>6} {'fees $':>7}")
    for name, agent in agents.items():
        result = run_episode(episode, agent,
                             SimConfig(rng_seed=11, cadence_s=60),
                             agent_name=name)
        m = compute_metrics(result.equity_curve, result.fills,
                            result.order_records, result.bankroll)
        print(f"{name:<10} {m.pnl / 1e6:>9.2f} {m.return_pct:>9.3f} "
              f"{m.max_drawdown_pct:>9.3f} {m.orders_submitted:>7} "
              f"{len(result.fills):>6} {m.fees_paid / 1e6:>7.2f}")


if __name__ == "__main__":
    main()
