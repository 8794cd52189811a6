"""Generate a synthetic episode and walk through what is inside it.

Run: python3 demos/01_generate_and_inspect.py
"""

import collections
import tempfile
from pathlib import Path

from pmbench.episodes import SynthConfig, generate_synthetic, load_episode, write_episode


def main():
    cfg = SynthConfig(seed=42, n_tickers=2, duration_s=1800)
    episode = generate_synthetic(cfg)
    print(f"episode {episode.metadata.episode_id}: "
          f"{len(episode.events)} events, tickers {episode.metadata.tickers}")

    kinds = collections.Counter(type(ev.payload).__name__
                                for ev in episode.events)
    for kind, n in sorted(kinds.items()):
        print(f"  {kind:<14} {n}")

    for ticker, (ts, outcome) in episode.settlements().items():
        print(f"  {ticker} settles {outcome} at ts {ts}")

    # round-trip through disk: loading what we wrote gives the same episode
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / episode.metadata.episode_id
        write_episode(episode, out)
        assert load_episode(out) == episode
        print(f"wrote and reloaded {sorted(p.name for p in out.iterdir())}")


if __name__ == "__main__":
    main()
