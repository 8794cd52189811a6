"""Episode directory format: load, validate, write, and synthesize.

An episode is a self-contained directory:

    metadata.json    -- episode configuration (single JSON object)
    orderbook.jsonl  -- book snapshots / deltas / lifecycle, one per line
    trades.jsonl     -- trade prints, one per line (always written, may be empty)
    settlement.json  -- per-ticker YES/NO outcome and settlement timestamp

All on-disk numbers are integers; serialization uses a fixed key order so
writing the same episode twice is byte-identical. See FORMAT.md.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .errors import (
    InvalidConfig,
    InvalidEpisode,
    MalformedRecord,
    MissingFile,
    UnknownTicker,
    UnsortedEvents,
    VersionMismatch,
)
from .units import MICRO_PER_USD, valid_price

FORMAT_VERSION = "1"

# Settlement events are not stored with explicit sequence numbers; at load
# they are assigned seq = SETTLEMENT_SEQ_BASE + index of the ticker in
# metadata.tickers, which keeps (ts, seq) unique and orders settlements
# after any feed event sharing their timestamp.
SETTLEMENT_SEQ_BASE = 1 << 31

EXECUTION_MODES = ("taker_only", "maker_taker")
MAKER_QUEUE_MODES = ("trade_only",)
DELTA_SIDES = ("YES_BID", "NO_BID")
OUTCOMES = ("YES", "NO")


# --- payloads ----------------------------------------------------------------

@dataclass(frozen=True)
class BookSnapshot:
    yes_bids: tuple  # ((price, count), ...) sorted ascending by price
    no_bids: tuple


@dataclass(frozen=True)
class BookDelta:
    side: str  # YES_BID | NO_BID
    price: int
    count_change: int


@dataclass(frozen=True)
class TradePrint:
    price: int  # YES price in cents
    count: int


@dataclass(frozen=True)
class Lifecycle:
    status: str  # "open" | "closed"


@dataclass(frozen=True)
class Settlement:
    outcome: str  # "YES" | "NO"


Payload = Union[BookSnapshot, BookDelta, TradePrint, Lifecycle, Settlement]


@dataclass(frozen=True)
class MarketEvent:
    ts: int
    seq: int
    ticker: str
    payload: Payload

    @property
    def key(self) -> tuple:
        return (self.ts, self.seq)


@dataclass(frozen=True)
class EpisodeMetadata:
    episode_id: str
    tickers: tuple
    start_ts: int
    end_ts: int
    bankroll: int  # micro-USD
    execution_mode: str = "maker_taker"
    maker_queue_mode: str = "trade_only"
    fee_model_version: str = "quadratic-1"
    format_version: str = FORMAT_VERSION

    def validate(self):
        if self.format_version != FORMAT_VERSION:
            raise VersionMismatch(
                f"format_version {self.format_version!r} != {FORMAT_VERSION!r}"
            )
        if not self.tickers:
            raise InvalidEpisode("tickers must be non-empty")
        if len(set(self.tickers)) != len(self.tickers):
            raise InvalidEpisode("tickers must be unique")
        if not self.start_ts < self.end_ts:
            raise InvalidEpisode("start_ts must be < end_ts")
        if self.bankroll <= 0:
            raise InvalidEpisode("bankroll must be > 0")
        if self.execution_mode not in EXECUTION_MODES:
            raise InvalidEpisode(f"unknown execution_mode {self.execution_mode!r}")
        if self.maker_queue_mode not in MAKER_QUEUE_MODES:
            raise InvalidEpisode(
                f"unknown maker_queue_mode {self.maker_queue_mode!r}"
            )


@dataclass(frozen=True)
class Episode:
    metadata: EpisodeMetadata
    events: tuple  # MarketEvent, sorted by (ts, seq), settlement events included

    def validate(self):
        self.metadata.validate()
        tickers = set(self.metadata.tickers)
        seen_keys = set()
        last_key = None
        active = set()
        settled = {}
        for ev in self.events:
            if last_key is not None and ev.key <= last_key:
                raise InvalidEpisode(
                    f"events not strictly sorted by (ts, seq) at {ev.key}"
                )
            last_key = ev.key
            if ev.key in seen_keys:
                raise InvalidEpisode(f"duplicate (ts, seq) {ev.key}")
            seen_keys.add(ev.key)
            if ev.ticker not in tickers:
                raise UnknownTicker(f"event ticker {ev.ticker!r} not in metadata")
            p = ev.payload
            if isinstance(p, BookSnapshot):
                for levels in (p.yes_bids, p.no_bids):
                    for price, count in levels:
                        if not valid_price(price):
                            raise InvalidEpisode(f"snapshot price {price} off grid")
                        if count < 0:
                            raise InvalidEpisode("snapshot count < 0")
                active.add(ev.ticker)
            elif isinstance(p, BookDelta):
                if not valid_price(p.price):
                    raise InvalidEpisode(f"delta price {p.price} off grid")
                if p.side not in DELTA_SIDES:
                    raise InvalidEpisode(f"delta side {p.side!r}")
                active.add(ev.ticker)
            elif isinstance(p, TradePrint):
                if not valid_price(p.price):
                    raise InvalidEpisode(f"trade price {p.price} off grid")
                if p.count < 1:
                    raise InvalidEpisode("trade count must be >= 1")
                active.add(ev.ticker)
            elif isinstance(p, Settlement):
                if p.outcome not in OUTCOMES:
                    raise InvalidEpisode(f"settlement outcome {p.outcome!r}")
                if ev.ticker in settled:
                    raise InvalidEpisode(f"duplicate settlement for {ev.ticker}")
                settled[ev.ticker] = p.outcome
            elif isinstance(p, Lifecycle):
                if p.status not in ("open", "closed"):
                    raise InvalidEpisode(f"lifecycle status {p.status!r}")
            else:
                raise InvalidEpisode(f"unknown payload type {type(p).__name__}")
        missing = active - set(settled)
        if missing:
            raise InvalidEpisode(
                f"tickers with market events but no settlement: {sorted(missing)}"
            )

    def settlements(self) -> dict:
        """ticker -> (ts, outcome) for every settlement event."""
        out = {}
        for ev in self.events:
            if isinstance(ev.payload, Settlement):
                out[ev.ticker] = (ev.ts, ev.payload.outcome)
        return out


# --- serialization helpers ----------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def _levels_to_obj(levels) -> dict:
    return {str(price): count for price, count in levels}


def _obj_to_levels(obj, where, line_no) -> tuple:
    try:
        pairs = sorted((int(k), int(v)) for k, v in obj.items())
    except (ValueError, AttributeError) as exc:
        raise MalformedRecord(where, line_no, f"bad price levels: {exc}")
    return tuple(pairs)


def _event_to_obj(ev: MarketEvent) -> dict:
    p = ev.payload
    base = {"ts": ev.ts, "seq": ev.seq, "ticker": ev.ticker}
    if isinstance(p, BookSnapshot):
        base["type"] = "snapshot"
        base["yes_bids"] = _levels_to_obj(p.yes_bids)
        base["no_bids"] = _levels_to_obj(p.no_bids)
    elif isinstance(p, BookDelta):
        base["type"] = "delta"
        base["side"] = p.side
        base["price"] = p.price
        base["count_change"] = p.count_change
    elif isinstance(p, Lifecycle):
        base["type"] = "lifecycle"
        base["status"] = p.status
    elif isinstance(p, TradePrint):
        base["type"] = "trade"
        base["price"] = p.price
        base["count"] = p.count
    else:
        raise InvalidEpisode(f"cannot serialize payload {type(p).__name__}")
    return base


def _obj_to_event(obj, path, line_no) -> MarketEvent:
    try:
        ts = int(obj["ts"])
        seq = int(obj["seq"])
        ticker = obj["ticker"]
        etype = obj["type"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(path, line_no, f"missing/bad field: {exc}")
    if not isinstance(ticker, str) or not ticker:
        raise MalformedRecord(path, line_no, "ticker must be a non-empty string")
    try:
        if etype == "snapshot":
            payload = BookSnapshot(
                yes_bids=_obj_to_levels(obj["yes_bids"], path, line_no),
                no_bids=_obj_to_levels(obj["no_bids"], path, line_no),
            )
        elif etype == "delta":
            payload = BookDelta(
                side=obj["side"],
                price=int(obj["price"]),
                count_change=int(obj["count_change"]),
            )
        elif etype == "lifecycle":
            payload = Lifecycle(status=obj["status"])
        elif etype == "trade":
            payload = TradePrint(price=int(obj["price"]), count=int(obj["count"]))
        else:
            raise MalformedRecord(path, line_no, f"unknown event type {etype!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(path, line_no, f"bad {etype} payload: {exc}")
    return MarketEvent(ts=ts, seq=seq, ticker=ticker, payload=payload)


def _read_jsonl(path: Path) -> list:
    events = []
    last_key = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(path, line_no, f"invalid JSON: {exc}")
            ev = _obj_to_event(obj, path, line_no)
            if last_key is not None and ev.key <= last_key:
                raise UnsortedEvents(
                    f"{path}:{line_no}: (ts, seq)={ev.key} not after {last_key}"
                )
            last_key = ev.key
            events.append(ev)
    return events


# --- load / write -------------------------------------------------------------

def load_episode(dir_path) -> Episode:
    """Load and validate an episode directory.

    The merged stream (orderbook + trades + settlements) is returned sorted
    by (ts, seq). Unsorted source files are rejected, never reordered.
    """
    d = Path(dir_path)
    meta_path = d / "metadata.json"
    book_path = d / "orderbook.jsonl"
    settle_path = d / "settlement.json"
    for p, name in ((meta_path, "metadata"), (book_path, "orderbook"),
                    (settle_path, "settlement")):
        if not p.is_file():
            raise MissingFile(f"{d}: missing {name} file ({p.name})")

    try:
        meta_obj = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedRecord(meta_path, 1, f"invalid JSON: {exc}")
    try:
        metadata = EpisodeMetadata(
            episode_id=meta_obj["episode_id"],
            tickers=tuple(meta_obj["tickers"]),
            start_ts=int(meta_obj["start_ts"]),
            end_ts=int(meta_obj["end_ts"]),
            bankroll=int(meta_obj["bankroll"]),
            execution_mode=meta_obj["execution_mode"],
            maker_queue_mode=meta_obj["maker_queue_mode"],
            fee_model_version=meta_obj["fee_model_version"],
            format_version=meta_obj["format_version"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(meta_path, 1, f"missing/bad metadata field: {exc}")
    metadata.validate()

    events = _read_jsonl(book_path)
    trades_path = d / "trades.jsonl"
    if trades_path.is_file():
        events.extend(_read_jsonl(trades_path))

    try:
        settle_obj = json.loads(settle_path.read_text(encoding="utf-8"))
        settlements = settle_obj["settlements"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise MalformedRecord(settle_path, 1, f"bad settlement file: {exc}")
    ticker_index = {t: i for i, t in enumerate(metadata.tickers)}
    for ticker, rec in settlements.items():
        if ticker not in ticker_index:
            raise UnknownTicker(f"settlement ticker {ticker!r} not in metadata")
        try:
            ts = int(rec["ts"])
            outcome = rec["outcome"]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(settle_path, 1, f"bad settlement record: {exc}")
        events.append(MarketEvent(
            ts=ts,
            seq=SETTLEMENT_SEQ_BASE + ticker_index[ticker],
            ticker=ticker,
            payload=Settlement(outcome=outcome),
        ))

    events.sort(key=lambda e: e.key)
    episode = Episode(metadata=metadata, events=tuple(events))
    episode.validate()
    return episode


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_episode(episode: Episode, dir_path):
    """Write an episode directory; bytes are a pure function of content."""
    try:
        episode.validate()
    except UnknownTicker:
        raise
    except Exception as exc:
        raise InvalidEpisode(str(exc))
    d = Path(dir_path)
    d.mkdir(parents=True, exist_ok=True)

    m = episode.metadata
    meta_obj = {
        "format_version": m.format_version,
        "episode_id": m.episode_id,
        "tickers": list(m.tickers),
        "start_ts": m.start_ts,
        "end_ts": m.end_ts,
        "bankroll": m.bankroll,
        "execution_mode": m.execution_mode,
        "maker_queue_mode": m.maker_queue_mode,
        "fee_model_version": m.fee_model_version,
    }
    _atomic_write(d / "metadata.json",
                  json.dumps(meta_obj, indent=2, ensure_ascii=False) + "\n")

    book_lines = []
    trade_lines = []
    settlements = {}
    for ev in episode.events:
        p = ev.payload
        if isinstance(p, Settlement):
            settlements[ev.ticker] = {"outcome": p.outcome, "ts": ev.ts}
        elif isinstance(p, TradePrint):
            trade_lines.append(_dump(_event_to_obj(ev)))
        else:
            book_lines.append(_dump(_event_to_obj(ev)))
    _atomic_write(d / "orderbook.jsonl",
                  "".join(line + "\n" for line in book_lines))
    _atomic_write(d / "trades.jsonl",
                  "".join(line + "\n" for line in trade_lines))
    settle_obj = {
        "format_version": FORMAT_VERSION,
        "settlements": {t: settlements[t] for t in sorted(settlements)},
    }
    _atomic_write(d / "settlement.json",
                  json.dumps(settle_obj, indent=2, ensure_ascii=False) + "\n")


# --- synthetic episodes ---------------------------------------------------------

# Fixed epoch for synthetic timelines: 2025-01-01T00:00:00Z.
SYNTH_EPOCH_MS = 1_735_689_600_000


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_tickers: int = 1
    duration_s: int = 3600
    book_update_period_s: int = 10
    trade_rate_per_min: float = 6.0
    spread_c: int = 2
    depth_per_level: int = 50
    vol_per_step_c: int = 1
    bankroll: int = 1000 * MICRO_PER_USD
    execution_mode: str = "maker_taker"

    def validate(self):
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        if self.n_tickers < 1:
            raise InvalidConfig("n_tickers must be >= 1")
        if self.duration_s < 1 or self.book_update_period_s < 1:
            raise InvalidConfig("duration and book period must be positive")
        if self.trade_rate_per_min < 0:
            raise InvalidConfig("trade_rate_per_min must be >= 0")
        if self.spread_c < 1 or self.spread_c + 2 > 98:
            raise InvalidConfig("spread_c must satisfy 1 <= spread_c <= 96")
        if self.depth_per_level < 1:
            raise InvalidConfig("depth_per_level must be >= 1")
        if self.vol_per_step_c < 0:
            raise InvalidConfig("vol_per_step_c must be >= 0")
        if self.bankroll <= 0:
            raise InvalidConfig("bankroll must be > 0")


def _snapshot_at(mid: int, spread: int, depth: int) -> BookSnapshot:
    bid = mid - (spread + 1) // 2
    bid = max(3, min(97 - spread, bid))
    ask = bid + spread
    yes_bids = tuple((bid - k, depth) for k in range(2, -1, -1))
    no_bids = tuple(sorted((100 - (ask + k), depth) for k in range(3)))
    return BookSnapshot(yes_bids=yes_bids, no_bids=no_bids)


def generate_synthetic(cfg: SynthConfig) -> Episode:
    """Deterministic synthetic episode: bounded random-walk mids, snapshots
    straddling the walk, trade prints at the touch, settlement by final mid.
    """
    cfg.validate()
    tickers = tuple(f"SYN-{cfg.seed}-T{i}" for i in range(cfg.n_tickers))
    start = SYNTH_EPOCH_MS
    end = start + cfg.duration_s * 1000
    period_ms = cfg.book_update_period_s * 1000
    trades_per_step = cfg.trade_rate_per_min * cfg.book_update_period_s / 60.0

    raw = []  # (ts, gen_index, payload-ish) before seq assignment
    outcomes = {}
    for i, ticker in enumerate(tickers):
        rng = random.Random(f"pmbench-synth:{cfg.seed}:{i}")
        mid = rng.randint(30, 70)
        ts = start
        while ts < end:
            mid = max(2, min(98, mid + rng.randint(-cfg.vol_per_step_c,
                                                   cfg.vol_per_step_c)))
            snap = _snapshot_at(mid, cfg.spread_c, cfg.depth_per_level)
            raw.append((ts, len(raw), ticker, snap))
            best_bid = snap.yes_bids[-1][0]
            best_ask = 100 - snap.no_bids[-1][0]
            n_trades = int(trades_per_step)
            if rng.random() < trades_per_step - n_trades:
                n_trades += 1
            offsets = sorted(rng.randrange(1, max(2, period_ms))
                             for _ in range(n_trades))
            for off in offsets:
                price = best_ask if rng.random() < 0.5 else best_bid
                count = rng.randint(1, max(1, cfg.depth_per_level // 10))
                t_ts = min(ts + off, end - 1)
                raw.append((t_ts, len(raw), ticker, TradePrint(price, count)))
            ts += period_ms
        outcomes[ticker] = "YES" if mid >= 50 else "NO"

    raw.sort(key=lambda r: (r[0], r[1]))
    events = [MarketEvent(ts=ts, seq=seq, ticker=ticker, payload=payload)
              for seq, (ts, _, ticker, payload) in enumerate(raw)]
    for i, ticker in enumerate(tickers):
        events.append(MarketEvent(
            ts=end, seq=SETTLEMENT_SEQ_BASE + i, ticker=ticker,
            payload=Settlement(outcome=outcomes[ticker]),
        ))

    metadata = EpisodeMetadata(
        episode_id=f"synth-{cfg.seed}",
        tickers=tickers,
        start_ts=start,
        end_ts=end,
        bankroll=cfg.bankroll,
        execution_mode=cfg.execution_mode,
    )
    episode = Episode(metadata=metadata, events=tuple(events))
    episode.validate()
    return episode
