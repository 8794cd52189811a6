"""Standardized per-episode and aggregate metrics.

Pure functions over equity curves, fill logs and order records so every
reported number can be recomputed from the run's output files alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptyCurve
from .execution import Direction, Fill, Liquidity, OrderRecord
from .units import MICRO_PER_HALF_CENT


@dataclass(frozen=True)
class EpisodeMetrics:
    pnl: int                       # micro-USD
    return_pct: float
    max_drawdown_pct: float
    sharpe: Optional[float]        # None when < 2 returns or sigma == 0
    sharpe_samples: int
    fees_paid: int                 # micro-USD
    avg_slippage_c: Optional[float]
    fill_ratio_pct: float
    contracts_traded: int
    orders_submitted: int
    qty_submitted: int
    qty_filled: int
    bankroll: int
    warnings: int = 0

    def to_json_obj(self) -> dict:
        return {
            "pnl_micro_usd": self.pnl,
            "return_pct": f"{self.return_pct:.6f}",
            "max_drawdown_pct": f"{self.max_drawdown_pct:.6f}",
            "sharpe": None if self.sharpe is None else f"{self.sharpe:.12f}",
            "sharpe_samples": self.sharpe_samples,
            "fees_paid_micro_usd": self.fees_paid,
            "avg_slippage_c": (None if self.avg_slippage_c is None
                               else f"{self.avg_slippage_c:.6f}"),
            "fill_ratio_pct": f"{self.fill_ratio_pct:.6f}",
            "contracts_traded": self.contracts_traded,
            "orders_submitted": self.orders_submitted,
            "qty_submitted": self.qty_submitted,
            "qty_filled": self.qty_filled,
            "bankroll_micro_usd": self.bankroll,
            "warnings": self.warnings,
        }


def max_drawdown_pct(equity: list) -> float:
    """Largest peak-to-trough decline as a percent of the running peak."""
    peak = None
    worst = 0.0
    for value in equity:
        if peak is None or value > peak:
            peak = value
        if peak > 0:
            dd = (peak - value) / peak
            if dd > worst:
                worst = dd
    return 100.0 * worst


def sharpe_ratio(equity: list):
    """Non-annualized mean/population-sigma of per-sample simple returns.

    Returns (sharpe or None, number of returns).
    """
    returns = []
    for prev, cur in zip(equity, equity[1:]):
        if prev != 0:
            returns.append((cur - prev) / prev)
    if len(returns) < 2:
        return None, len(returns)
    arr = np.asarray(returns, dtype=np.float64)
    sigma = float(arr.std())  # population sigma
    if sigma == 0.0:
        return None, len(returns)
    return float(arr.mean()) / sigma, len(returns)


def avg_slippage_cents(fills: list):
    """Mean direction-signed (fill price - mid at submit) over taker fills,
    in cents per contract; positive means worse than mid. None when there
    are no taker fills with a recorded submit mid."""
    total_hc = 0  # half-cents, quantity-weighted
    qty = 0
    for f in fills:
        if f.liquidity != Liquidity.TAKER or f.mid_at_submit is None:
            continue
        diff_hc = 2 * f.price - f.mid_at_submit
        if f.direction == Direction.SELL:
            diff_hc = -diff_hc
        total_hc += diff_hc * f.quantity
        qty += f.quantity
    if qty == 0:
        return None
    return total_hc / (2.0 * qty)


def compute_metrics(equity_curve: list, fills: list, orders: list,
                    bankroll: int, warnings: int = 0) -> EpisodeMetrics:
    """equity_curve: time-sorted (ts, equity_micro_usd) pairs."""
    if not equity_curve:
        raise EmptyCurve("equity curve is empty")
    values = [e for _, e in equity_curve]
    pnl = values[-1] - bankroll
    sharpe, n_ret = sharpe_ratio(values)
    qty_submitted = sum(o.submitted_qty for o in orders)
    qty_filled = sum(o.filled_qty for o in orders)
    fill_ratio = 100.0 * qty_filled / qty_submitted if qty_submitted else 100.0
    return EpisodeMetrics(
        pnl=pnl,
        return_pct=100.0 * pnl / bankroll,
        max_drawdown_pct=max_drawdown_pct(values),
        sharpe=sharpe,
        sharpe_samples=n_ret,
        fees_paid=sum(f.fee for f in fills),
        avg_slippage_c=avg_slippage_cents(fills),
        fill_ratio_pct=fill_ratio,
        contracts_traded=sum(f.quantity for f in fills),
        orders_submitted=len(orders),
        qty_submitted=qty_submitted,
        qty_filled=qty_filled,
        bankroll=bankroll,
        warnings=warnings,
    )


@dataclass(frozen=True)
class AggregateMetrics:
    pnl: int
    return_pct: float
    max_drawdown_pct: float  # worst single-episode drawdown
    fees_paid: int
    fill_ratio_pct: float    # recomputed from summed quantities
    contracts_traded: int
    orders_submitted: int
    qty_submitted: int
    qty_filled: int
    bankroll: int
    episodes: int

    def to_json_obj(self) -> dict:
        return {
            "pnl_micro_usd": self.pnl,
            "return_pct": f"{self.return_pct:.6f}",
            "max_drawdown_pct": f"{self.max_drawdown_pct:.6f}",
            "fees_paid_micro_usd": self.fees_paid,
            "fill_ratio_pct": f"{self.fill_ratio_pct:.6f}",
            "contracts_traded": self.contracts_traded,
            "orders_submitted": self.orders_submitted,
            "qty_submitted": self.qty_submitted,
            "qty_filled": self.qty_filled,
            "bankroll_micro_usd": self.bankroll,
            "episodes": self.episodes,
        }


def aggregate(per_episode: list) -> AggregateMetrics:
    """Sum across episodes; fill ratio is recomputed from summed quantities,
    never averaged."""
    if not per_episode:
        raise EmptyCurve("no episodes to aggregate")
    pnl = sum(m.pnl for m in per_episode)
    bankroll = sum(m.bankroll for m in per_episode)
    qty_submitted = sum(m.qty_submitted for m in per_episode)
    qty_filled = sum(m.qty_filled for m in per_episode)
    return AggregateMetrics(
        pnl=pnl,
        return_pct=100.0 * pnl / bankroll,
        max_drawdown_pct=max(m.max_drawdown_pct for m in per_episode),
        fees_paid=sum(m.fees_paid for m in per_episode),
        fill_ratio_pct=(100.0 * qty_filled / qty_submitted
                        if qty_submitted else 100.0),
        contracts_traded=sum(m.contracts_traded for m in per_episode),
        orders_submitted=sum(m.orders_submitted for m in per_episode),
        qty_submitted=qty_submitted,
        qty_filled=qty_filled,
        bankroll=bankroll,
        episodes=len(per_episode),
    )
