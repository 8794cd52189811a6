"""Shared builders for hand-constructed episodes and books."""

from __future__ import annotations

import pytest

from pmbench.episodes import (
    BookDelta,
    BookSnapshot,
    Episode,
    EpisodeMetadata,
    Lifecycle,
    MarketEvent,
    Settlement,
    TradePrint,
)
from pmbench.units import MICRO_PER_USD

T0 = 1_700_000_000_000  # arbitrary UTC ms epoch for hand episodes


def snap(yes_bids: dict, no_bids: dict) -> BookSnapshot:
    return BookSnapshot(
        yes_bids=tuple(sorted(yes_bids.items())),
        no_bids=tuple(sorted(no_bids.items())),
    )


def make_metadata(tickers=("TKT",), start=T0, end=T0 + 3_600_000,
                  bankroll=1000 * MICRO_PER_USD, mode="maker_taker"):
    return EpisodeMetadata(
        episode_id="hand-1",
        tickers=tuple(tickers),
        start_ts=start,
        end_ts=end,
        bankroll=bankroll,
        execution_mode=mode,
    )


def make_episode(events, **meta_kwargs) -> Episode:
    """events: list of (ts_offset_ms, ticker, payload); seq auto-assigned.

    Settlement payloads get high sequence numbers like the loader does.
    """
    meta = make_metadata(**meta_kwargs)
    ticker_index = {t: i for i, t in enumerate(meta.tickers)}
    out = []
    seq = 0
    for off, ticker, payload in events:
        if isinstance(payload, Settlement):
            s = (1 << 31) + ticker_index[ticker]
        else:
            s = seq
            seq += 1
        out.append(MarketEvent(ts=meta.start_ts + off, seq=s,
                               ticker=ticker, payload=payload))
    out.sort(key=lambda e: e.key)
    ep = Episode(metadata=meta, events=tuple(out))
    ep.validate()
    return ep


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One verdict line per acceptance criterion, when that suite ran."""
    try:
        import test_acceptance
    except ImportError:
        return
    results = getattr(test_acceptance, "RESULTS", {})
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, verdict in results.items():
        terminalreporter.write_line(f"{verdict}  {name}")


@pytest.fixture
def simple_episode():
    """One ticker, one snapshot, a few prints, YES settlement at 1h."""
    return make_episode([
        (0, "TKT", snap({48: 100, 47: 100}, {50: 80, 49: 80})),
        (60_000, "TKT", TradePrint(price=50, count=10)),
        (120_000, "TKT", TradePrint(price=48, count=10)),
        (3_600_000, "TKT", Settlement(outcome="YES")),
    ])
