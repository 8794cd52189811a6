"""Built-in baseline agents: null, random, and Bollinger mean-reversion."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Optional

from .agent_api import AgentContext
from .errors import PMBenchError
from .execution import Direction, OrderSpec, OrderType, Side, Tif

logger = logging.getLogger(__name__)


class NullAgent:
    """Observes nothing, trades nothing."""

    def step(self, ctx: AgentContext):
        ctx.done()


@dataclass(frozen=True)
class RandomConfig:
    trade_prob: float = 0.1
    min_qty: int = 1
    max_qty: int = 3
    position_cap: int = 10  # cap on |yes_qty - no_qty| per ticker


class RandomAgent:
    """With probability trade_prob per step, market-buys or -sells a small
    random quantity in a random quoted market, respecting a per-ticker net
    position cap. Seeded per-episode from (seed_base, episode_id)."""

    def __init__(self, cfg: RandomConfig = RandomConfig()):
        self.cfg = cfg
        self.rng: Optional[random.Random] = None

    def begin(self, metadata, seed_base: int):
        self.rng = random.Random(f"{seed_base}:{metadata.episode_id}")

    def step(self, ctx: AgentContext):
        rng = self.rng
        cfg = self.cfg
        try:
            if rng.random() >= cfg.trade_prob:
                return
            markets = ctx.get_markets()
            quoted = [m for m in markets
                      if m["status"] == "open"
                      and m["yes_bid"] is not None and m["yes_ask"] is not None]
            if not quoted:
                return
            market = quoted[rng.randrange(len(quoted))]
            side = Side.YES if rng.randrange(2) == 0 else Side.NO
            direction = Direction.BUY if rng.randrange(2) == 0 else Direction.SELL
            qty = rng.randint(cfg.min_qty, cfg.max_qty)

            positions = ctx.get_positions()["positions"]
            net = 0
            for p in positions:
                if p["ticker"] == market["ticker"]:
                    net = p["yes_qty"] - p["no_qty"]
            delta = qty if side == Side.YES else -qty
            if direction == Direction.SELL:
                delta = -delta
            if abs(net + delta) > cfg.position_cap:
                return
            try:
                ctx.place_order(OrderSpec(
                    ticker=market["ticker"], side=side, direction=direction,
                    order_type=OrderType.MARKET, quantity=qty, tif=Tif.IOC))
            except PMBenchError as exc:
                logger.debug("random order rejected: %s", exc)
        finally:
            if not ctx.done_called:
                ctx.done()


@dataclass(frozen=True)
class BollingerConfig:
    period: int = 20
    k: float = 2.0
    order_qty: int = 5


def sma_sigma(window) -> tuple:
    """Simple moving average and population standard deviation."""
    n = len(window)
    mean = sum(window) / n
    var = sum((x - mean) ** 2 for x in window) / n
    return mean, var ** 0.5


class BollingerAgent:
    """Mean reversion on band crossings, maker GTC limit orders only.

    Per ticker a rolling window of mids (half-cents) feeds SMA +/- k*sigma
    bands. A downward crossing of the lower band buys YES at the bid; an
    upward crossing of the upper band sells held YES at the ask, or buys
    NO at the NO bid when flat. At most one open order per ticker.
    """

    def __init__(self, cfg: BollingerConfig = BollingerConfig()):
        self.cfg = cfg
        self.history: dict = {}    # ticker -> list of mids (half-cents)
        self.prev: dict = {}       # ticker -> (mid, lower, upper)
        self.open_order: dict = {}  # ticker -> order_id

    def _signal(self, ticker: str, mid: int) -> Optional[str]:
        cfg = self.cfg
        hist = self.history.setdefault(ticker, [])
        hist.append(mid)
        if len(hist) > cfg.period:
            del hist[0]
        if len(hist) < cfg.period:
            self.prev.pop(ticker, None)
            return None
        sma, sigma = sma_sigma(hist)
        lower = sma - cfg.k * sigma
        upper = sma + cfg.k * sigma
        prev = self.prev.get(ticker)
        self.prev[ticker] = (mid, lower, upper)
        if prev is None:
            return None
        prev_mid, prev_lower, prev_upper = prev
        if prev_mid >= prev_lower and mid < lower:
            return "buy"
        if prev_mid <= prev_upper and mid > upper:
            return "sell"
        return None

    def _replace_order(self, ctx: AgentContext, ticker: str, spec: OrderSpec):
        order_id = self.open_order.pop(ticker, None)
        if order_id is not None:
            try:
                ctx.cancel_order(order_id)
            except PMBenchError:
                pass  # already filled or gone
        ack = ctx.place_order(spec)
        if ack["resting"]:
            self.open_order[ticker] = ack["order_id"]

    def step(self, ctx: AgentContext):
        cfg = self.cfg
        try:
            markets = ctx.get_markets()
            positions = None
            for m in markets:
                if (m["status"] != "open" or m["yes_bid"] is None
                        or m["yes_ask"] is None):
                    continue
                ticker = m["ticker"]
                mid = m["yes_bid"] + m["yes_ask"]  # half-cents
                signal = self._signal(ticker, mid)
                if signal is None:
                    continue
                try:
                    if signal == "buy":
                        self._replace_order(ctx, ticker, OrderSpec(
                            ticker=ticker, side=Side.YES,
                            direction=Direction.BUY,
                            order_type=OrderType.LIMIT,
                            limit_price=m["yes_bid"],
                            quantity=cfg.order_qty, tif=Tif.GTC))
                    else:
                        if positions is None:
                            positions = {p["ticker"]: p for p in
                                         ctx.get_positions()["positions"]}
                        pos = positions.get(ticker)
                        yes_held = pos["yes_qty"] if pos else 0
                        if yes_held > 0:
                            self._replace_order(ctx, ticker, OrderSpec(
                                ticker=ticker, side=Side.YES,
                                direction=Direction.SELL,
                                order_type=OrderType.LIMIT,
                                limit_price=m["yes_ask"],
                                quantity=min(cfg.order_qty, yes_held),
                                tif=Tif.GTC))
                        elif pos is None or pos["no_qty"] == 0:
                            # flat: hedge by buying the complementary side
                            self._replace_order(ctx, ticker, OrderSpec(
                                ticker=ticker, side=Side.NO,
                                direction=Direction.BUY,
                                order_type=OrderType.LIMIT,
                                limit_price=100 - m["yes_ask"],
                                quantity=cfg.order_qty, tif=Tif.GTC))
                except PMBenchError as exc:
                    logger.debug("bollinger order rejected: %s", exc)
        finally:
            if not ctx.done_called:
                ctx.done()


def make_agent(name: str, seed: int = 0, **kwargs):
    """Factory for CLI agent selection (bridge agents are built elsewhere)."""
    if name == "null":
        return NullAgent()
    if name == "random":
        return RandomAgent(RandomConfig(**kwargs))
    if name == "bollinger":
        return BollingerAgent(BollingerConfig(**kwargs))
    raise PMBenchError(f"unknown agent {name!r}")
