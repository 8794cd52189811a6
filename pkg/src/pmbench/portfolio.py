"""Cash, positions, fees, realized P&L, settlement, and equity marks.

All amounts are integer micro-USD. Cost basis is average-cost per
(ticker, side) and includes acquisition fees, so realized P&L and the
equity identity are exact integers. Cash never goes negative: orders are
gated at placement with worst-case cost, and resting buys earmark cash.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import InsufficientFunds, InsufficientPosition, UnknownTicker
from .execution import Direction, Fill, Side
from .units import MICRO_PER_CENT, MICRO_PER_HALF_CENT, MICRO_PER_USD


@dataclass
class Position:
    ticker: str
    yes_qty: int = 0
    no_qty: int = 0
    yes_cost: int = 0  # total basis incl. acquisition fees, micro-USD
    no_cost: int = 0

    def is_flat(self) -> bool:
        return self.yes_qty == 0 and self.no_qty == 0


@dataclass
class SettlementRecord:
    ticker: str
    outcome: str
    ts: int
    yes_qty: int
    no_qty: int
    credit: int       # cash paid in, micro-USD
    basis_cleared: int


class Portfolio:
    def __init__(self, bankroll: int):
        self.bankroll = bankroll
        self.cash = bankroll
        self.reserved = 0  # earmarked for resting buy orders; subset of cash
        self.positions: dict = {}
        self.fees_paid = 0
        self.realized_pnl = 0
        self.settled: set = set()
        self.settlement_records: list = []

    def position(self, ticker: str) -> Position:
        pos = self.positions.get(ticker)
        if pos is None:
            pos = Position(ticker=ticker)
            self.positions[ticker] = pos
        return pos

    def available_cash(self) -> int:
        return self.cash - self.reserved

    def reserve(self, amount: int):
        if amount > self.available_cash():
            raise InsufficientFunds(
                f"cannot reserve {amount}, available {self.available_cash()}")
        self.reserved += amount

    def release(self, amount: int):
        self.reserved -= min(amount, self.reserved)

    def apply_fill(self, fill: Fill):
        pos = self.position(fill.ticker)
        notional = fill.price * fill.quantity * MICRO_PER_CENT
        if fill.direction == Direction.BUY:
            total = notional + fill.fee
            if total > self.cash:
                raise InsufficientFunds(
                    f"fill cost {total} exceeds cash {self.cash}")
            self.cash -= total
            if fill.side == Side.YES:
                pos.yes_qty += fill.quantity
                pos.yes_cost += total
            else:
                pos.no_qty += fill.quantity
                pos.no_cost += total
        else:
            held = pos.yes_qty if fill.side == Side.YES else pos.no_qty
            if fill.quantity > held:
                raise InsufficientPosition(
                    f"sell {fill.quantity} exceeds held {held} "
                    f"{fill.side.value} {fill.ticker}")
            proceeds = notional - fill.fee
            basis = pos.yes_cost if fill.side == Side.YES else pos.no_cost
            basis_removed = basis * fill.quantity // held
            self.cash += proceeds
            self.realized_pnl += proceeds - basis_removed
            if fill.side == Side.YES:
                pos.yes_qty -= fill.quantity
                pos.yes_cost -= basis_removed
            else:
                pos.no_qty -= fill.quantity
                pos.no_cost -= basis_removed
        self.fees_paid += fill.fee

    def settle(self, ticker: str, outcome: str, ts: int) -> SettlementRecord:
        """Winning side pays $1 per contract; positions clear; no settlement fee."""
        if outcome not in ("YES", "NO"):
            raise UnknownTicker(f"bad outcome {outcome!r}")
        pos = self.positions.get(ticker, Position(ticker=ticker))
        win_qty = pos.yes_qty if outcome == "YES" else pos.no_qty
        credit = win_qty * MICRO_PER_USD
        basis = pos.yes_cost + pos.no_cost
        self.cash += credit
        self.realized_pnl += credit - basis
        rec = SettlementRecord(ticker=ticker, outcome=outcome, ts=ts,
                               yes_qty=pos.yes_qty, no_qty=pos.no_qty,
                               credit=credit, basis_cleared=basis)
        self.positions[ticker] = Position(ticker=ticker)
        self.settled.add(ticker)
        self.settlement_records.append(rec)
        return rec

    def position_value(self, marks: dict) -> int:
        """Mark positions: YES at mark, NO at 100c - mark (half-cent marks are
        exact at 5,000 micro-USD); missing mark falls back to cost basis."""
        value = 0
        for ticker, pos in self.positions.items():
            if pos.is_flat():
                continue
            mark = marks.get(ticker)
            if mark is None:
                value += pos.yes_cost + pos.no_cost
            else:
                value += (pos.yes_qty * mark
                          + pos.no_qty * (200 - mark)) * MICRO_PER_HALF_CENT
        return value

    def equity(self, marks: dict) -> int:
        return self.cash + self.position_value(marks)
