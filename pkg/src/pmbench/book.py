"""Per-ticker displayed depth on the 1..99 cent grid.

YES bids and NO bids are stored; YES asks are always derived as
100 - best NO bid. Mid prices are integer half-cents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .episodes import BookDelta, BookSnapshot, TradePrint
from .errors import CrossedSnapshot


@dataclass(frozen=True)
class Quotes:
    yes_bid: Optional[int] = None
    yes_ask: Optional[int] = None
    bid_sz: Optional[int] = None
    ask_sz: Optional[int] = None


@dataclass
class Book:
    ticker: str
    yes_bids: dict = field(default_factory=dict)  # price -> count, count > 0
    no_bids: dict = field(default_factory=dict)
    last_trade_price: Optional[int] = None
    last_update: tuple = (0, -1)

    def apply_snapshot(self, snap: BookSnapshot, ts: int, seq: int):
        yes_bids = {p: c for p, c in snap.yes_bids if c > 0}
        no_bids = {p: c for p, c in snap.no_bids if c > 0}
        if yes_bids and no_bids:
            if max(yes_bids) + max(no_bids) >= 100:
                raise CrossedSnapshot(
                    f"{self.ticker}: yes bid {max(yes_bids)} >= derived ask "
                    f"{100 - max(no_bids)} at (ts={ts}, seq={seq})"
                )
        self.yes_bids = yes_bids
        self.no_bids = no_bids
        self.last_update = (ts, seq)

    def apply_delta(self, delta: BookDelta, ts: int, seq: int) -> bool:
        """Apply a depth change; returns True if it was clamped at zero."""
        store = self.yes_bids if delta.side == "YES_BID" else self.no_bids
        new = store.get(delta.price, 0) + delta.count_change
        clamped = new < 0
        if clamped:
            new = 0
        if new == 0:
            store.pop(delta.price, None)
        else:
            store[delta.price] = new
        self.last_update = (ts, seq)
        return clamped

    def on_trade(self, trade: TradePrint, ts: int, seq: int):
        self.last_trade_price = trade.price
        self.last_update = (ts, seq)

    def best_quotes(self) -> Quotes:
        yes_bid = yes_ask = bid_sz = ask_sz = None
        if self.yes_bids:
            yes_bid = max(self.yes_bids)
            bid_sz = self.yes_bids[yes_bid]
        if self.no_bids:
            best_no = max(self.no_bids)
            yes_ask = 100 - best_no
            ask_sz = self.no_bids[best_no]
        return Quotes(yes_bid=yes_bid, yes_ask=yes_ask,
                      bid_sz=bid_sz, ask_sz=ask_sz)

    def mark_price(self) -> Optional[int]:
        """Mid in half-cents when both quotes exist; else last trade; else None."""
        q = self.best_quotes()
        if q.yes_bid is not None and q.yes_ask is not None:
            return q.yes_bid + q.yes_ask
        if self.last_trade_price is not None:
            return 2 * self.last_trade_price
        return None

    def depth_total(self) -> int:
        return sum(self.yes_bids.values()) + sum(self.no_bids.values())


@dataclass
class DataQuality:
    crossed_snapshots: int = 0
    clamped_deltas: int = 0
    warnings: list = field(default_factory=list)

    def warn(self, message: str):
        self.warnings.append(message)


class BookSet:
    """All per-ticker books plus data-quality counters for one episode."""

    def __init__(self):
        self.books: dict = {}
        self.quality = DataQuality()

    def book(self, ticker: str) -> Book:
        b = self.books.get(ticker)
        if b is None:
            b = Book(ticker=ticker)
            self.books[ticker] = b
        return b

    def apply_event(self, ticker: str, payload, ts: int, seq: int):
        b = self.book(ticker)
        if isinstance(payload, BookSnapshot):
            try:
                b.apply_snapshot(payload, ts, seq)
            except CrossedSnapshot as exc:
                self.quality.crossed_snapshots += 1
                self.quality.warn(f"crossed snapshot skipped: {exc.message}")
        elif isinstance(payload, BookDelta):
            if b.apply_delta(payload, ts, seq):
                self.quality.clamped_deltas += 1
                self.quality.warn(
                    f"delta clamped at zero: {ticker} {payload.side} "
                    f"{payload.price} {payload.count_change:+d} at ts={ts}"
                )
        elif isinstance(payload, TradePrint):
            b.on_trade(payload, ts, seq)
