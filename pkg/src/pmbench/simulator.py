"""Deterministic event loop for one episode.

Replays the (ts, seq)-sorted stream, advances books, routes trade prints
to the maker queue, invokes the agent at a fixed cadence, samples equity
on its own grid, and terminates once the last settlement is processed.
Strictly single-threaded; output is a pure function of (episode, agent
code + seed, config).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .agent_api import AgentContext, spec_to_obj
from .book import BookSet
from .episodes import (
    BookDelta,
    BookSnapshot,
    Episode,
    Lifecycle,
    Settlement,
    TradePrint,
)
from .errors import (
    BudgetExhausted,
    InsufficientFunds,
    InsufficientPosition,
    InvalidConfig,
    MarketClosed,
    NotInStep,
    OrderRejected,
    PMBenchError,
    UnknownTicker,
    UnsupportedTif,
)
from .execution import (
    Direction,
    ExecutionEngine,
    FeeModel,
    Fill,
    Liquidity,
    OrderSpec,
    OrderType,
    Tif,
    fee,
    match_taker,
)
from .portfolio import Portfolio
from .units import MICRO_PER_CENT, div_ceil


@dataclass(frozen=True)
class SimConfig:
    cadence_s: int = 300
    equity_sample_s: int = 60
    max_tool_rounds: int = 3
    rng_seed: int = 0
    execution_mode: Optional[str] = None  # None: use episode metadata
    maker_queue_mode: str = "trade_only"
    calls_per_round: int = 8  # flat budget = max_tool_rounds * calls_per_round

    def validate(self):
        if self.cadence_s < 1 or self.equity_sample_s < 1:
            raise InvalidConfig("cadence_s and equity_sample_s must be >= 1")
        if self.max_tool_rounds < 1 or self.calls_per_round < 1:
            raise InvalidConfig("tool budget parameters must be >= 1")

    @property
    def tool_budget(self) -> int:
        return self.max_tool_rounds * self.calls_per_round


@dataclass(frozen=True)
class EquitySample:
    ts: int
    equity: int
    cash: int
    position_value: int


@dataclass
class EpisodeResult:
    episode_id: str
    bankroll: int
    agent_name: str
    fills: list = field(default_factory=list)
    order_records: list = field(default_factory=list)
    equity_samples: list = field(default_factory=list)
    trade_log: list = field(default_factory=list)  # JSON-ready dicts
    settlement_records: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    data_quality: dict = field(default_factory=dict)
    decision_steps: int = 0
    fees_paid: int = 0
    realized_pnl: int = 0
    final_cash: int = 0
    aborted: bool = False
    error: Optional[str] = None

    @property
    def equity_curve(self) -> list:
        return [(s.ts, s.equity) for s in self.equity_samples]


def _fill_to_obj(f: Fill) -> dict:
    return {
        "type": "fill",
        "ts": f.ts,
        "order_id": f.order_id,
        "ticker": f.ticker,
        "side": f.side.value,
        "direction": f.direction.value,
        "price": f.price,
        "quantity": f.quantity,
        "liquidity": f.liquidity.value,
        "fee_micro_usd": f.fee,
        "mid_at_submit_hc": f.mid_at_submit,
    }


class SimState:
    """Mutable world state owned by the event loop; the surface the
    AgentContext exposes reads and actions against."""

    def __init__(self, episode: Episode, cfg: SimConfig):
        self.episode = episode
        self.cfg = cfg
        self.meta = episode.metadata
        self.execution_mode = cfg.execution_mode or self.meta.execution_mode
        self.books = BookSet()
        self.fee_model = FeeModel()
        self.engine = ExecutionEngine(
            self.books, self.fee_model,
            execution_mode=self.execution_mode,
            maker_queue_mode=cfg.maker_queue_mode)
        self.portfolio = Portfolio(self.meta.bankroll)
        self.marks: dict = {}          # ticker -> half-cents, frozen after close
        self.closed: set = set()
        self.settle_ts = {t: ts for t, (ts, _) in episode.settlements().items()}
        self.order_reserves: dict = {}  # order_id -> earmarked micro-USD left
        self.trade_log: list = []
        self.fills: list = []
        self.now_ts = self.meta.start_ts
        self.now_seq = -1

    # -- event application -------------------------------------------------------

    def apply_event(self, ev):
        self.now_ts = max(self.now_ts, ev.ts)
        self.now_seq = ev.seq
        p = ev.payload
        if isinstance(p, Settlement):
            self._release_ticker_orders(ev.ticker, ev.ts)
            self.portfolio.settle(ev.ticker, p.outcome, ev.ts)
            return
        if isinstance(p, Lifecycle):
            if p.status == "closed":
                self._release_ticker_orders(ev.ticker, ev.ts)
                self.closed.add(ev.ticker)
            return
        self.books.apply_event(ev.ticker, p, ev.ts, ev.seq)
        if isinstance(p, TradePrint):
            for f in self.engine.on_trade_print(ev.ticker, p.price, p.count,
                                                ev.ts):
                self._apply_maker_fill(f)
        if ev.ticker not in self.closed and ev.ticker not in self.portfolio.settled:
            mp = self.books.book(ev.ticker).mark_price()
            if mp is not None:
                self.marks[ev.ticker] = mp

    def _release_ticker_orders(self, ticker: str, ts: int):
        for ack in self.engine.cancel_all((ts, self.now_seq), ticker=ticker):
            self._release_order_reserve(ack.order_id)
            self.trade_log.append({
                "type": "cancel", "ts": ts, "order_id": ack.order_id,
                "canceled_qty": ack.canceled_qty, "reason": "auto",
            })

    def _release_order_reserve(self, order_id: int):
        left = self.order_reserves.pop(order_id, 0)
        if left:
            self.portfolio.release(left)

    def _apply_maker_fill(self, f: Fill):
        if f.direction == Direction.BUY:
            cost = f.price * f.quantity * MICRO_PER_CENT + f.fee
            left = self.order_reserves.get(f.order_id, 0)
            release = min(left, cost)
            if release:
                self.order_reserves[f.order_id] = left - release
                self.portfolio.release(release)
        self.portfolio.apply_fill(f)
        if f.order_id not in self.engine.resting:
            self._release_order_reserve(f.order_id)
        self.fills.append(f)
        self.trade_log.append(_fill_to_obj(f))

    # -- observations -------------------------------------------------------------

    def _ticker_status(self, ticker: str) -> str:
        if ticker in self.portfolio.settled:
            return "settled"
        if ticker in self.closed:
            return "closed"
        return "open"

    def market_summaries(self) -> list:
        out = []
        for ticker in self.meta.tickers:
            book = self.books.book(ticker)
            q = book.best_quotes()
            settle_ts = self.settle_ts.get(ticker, self.meta.end_ts)
            out.append({
                "ticker": ticker,
                "yes_bid": q.yes_bid,
                "yes_ask": q.yes_ask,
                "bid_sz": q.bid_sz,
                "ask_sz": q.ask_sz,
                "last": book.last_trade_price,
                "time_to_settlement_s": max(0, (settle_ts - self.now_ts) // 1000),
                "status": self._ticker_status(ticker),
            })
        return out

    def orderbook_view(self, ticker: str, depth: Optional[int] = None) -> dict:
        if ticker not in self.meta.tickers:
            raise UnknownTicker(f"ticker {ticker!r} not in episode")
        book = self.books.book(ticker)
        bids = sorted(book.yes_bids.items(), reverse=True)
        asks = sorted((100 - p, c) for p, c in book.no_bids.items())
        if depth is not None:
            bids = bids[:depth]
            asks = asks[:depth]
        return {
            "ticker": ticker,
            "yes_bids": [[p, c] for p, c in bids],
            "yes_asks": [[p, c] for p, c in asks],
            "status": self._ticker_status(ticker),
        }

    def positions_view(self) -> dict:
        positions = []
        for ticker in self.meta.tickers:
            pos = self.portfolio.positions.get(ticker)
            if pos is None or pos.is_flat():
                continue
            positions.append({
                "ticker": ticker,
                "yes_qty": pos.yes_qty,
                "no_qty": pos.no_qty,
                "yes_cost_micro_usd": pos.yes_cost,
                "no_cost_micro_usd": pos.no_cost,
            })
        return {
            "cash_micro_usd": self.portfolio.cash,
            "reserved_micro_usd": self.portfolio.reserved,
            "equity_micro_usd": self.portfolio.equity(self.marks),
            "positions": positions,
        }

    def open_orders_view(self) -> list:
        return [{
            "order_id": o.order_id,
            "ticker": o.spec.ticker,
            "side": o.spec.side.value,
            "direction": o.spec.direction.value,
            "limit_price": o.spec.limit_price,
            "quantity": o.spec.quantity,
            "remaining": o.remaining,
            "queue_ahead": o.queue_ahead,
            "tif": o.spec.tif.value,
            "placed_ts": o.placed_at[0],
        } for o in self.engine.open_orders()]

    def step_summary(self, step_index: int, now_ts: int) -> dict:
        pv = self.positions_view()
        return {
            "episode_id": self.meta.episode_id,
            "step_index": step_index,
            "now_ts": now_ts,
            "seed": self.cfg.rng_seed,
            "cash_micro_usd": pv["cash_micro_usd"],
            "equity_micro_usd": pv["equity_micro_usd"],
            "markets": self.market_summaries(),
            "positions": pv["positions"],
            "open_orders": self.open_orders_view(),
        }

    # -- actions -----------------------------------------------------------------

    def _committed_sell_qty(self, ticker: str, side) -> int:
        return sum(o.remaining for o in self.engine.open_orders(ticker)
                   if o.spec.side == side and o.spec.direction == Direction.SELL)

    def _check_affordable(self, spec: OrderSpec):
        available = self.portfolio.available_cash()
        if spec.order_type == OrderType.LIMIT:
            lp = spec.limit_price
            worst = (spec.quantity * lp * MICRO_PER_CENT
                     + fee(self.fee_model, Liquidity.TAKER, lp, spec.quantity))
            if worst > available:
                raise InsufficientFunds(
                    f"worst-case cost {worst} exceeds available {available}")
        else:
            book = self.books.book(spec.ticker)
            fills, _ = match_taker(book, spec, self.fee_model, mutate=False)
            cost = sum(f.price * f.quantity * MICRO_PER_CENT + f.fee
                       for f in fills)
            if cost > available:
                raise InsufficientFunds(
                    f"market order cost {cost} exceeds available {available}")

    def _maker_reserve(self, lp: int, qty: int) -> int:
        # Notional plus a fee earmark padded to dominate any per-fill
        # round-half-up sequence.
        n = self.fee_model.maker_rate_bp * lp * (100 - lp) * qty
        return qty * lp * MICRO_PER_CENT + div_ceil(n, 100) + qty

    def place_order(self, spec: OrderSpec) -> dict:
        now = (self.now_ts, self.now_seq)
        try:
            spec.validate()
            if spec.ticker not in self.meta.tickers:
                raise UnknownTicker(f"ticker {spec.ticker!r} not in episode")
            status = self._ticker_status(spec.ticker)
            if status != "open":
                raise MarketClosed(f"{spec.ticker} is {status}")
            if self.execution_mode == "taker_only" and spec.tif != Tif.IOC:
                # surface before any money movement
                raise UnsupportedTif(
                    f"taker_only mode rejects {spec.tif.value} orders")
            if spec.direction == Direction.BUY:
                self._check_affordable(spec)
            else:
                pos = self.portfolio.position(spec.ticker)
                held = pos.yes_qty if spec.side.value == "YES" else pos.no_qty
                free = held - self._committed_sell_qty(spec.ticker, spec.side)
                if spec.quantity > free:
                    raise InsufficientPosition(
                        f"sell {spec.quantity} exceeds free position {free}")
            mid = self.books.book(spec.ticker).mark_price()
            if mid is not None and spec.side.value == "NO":
                mid = 200 - mid
            ack = self.engine.place(spec, now, mid_at_submit=mid)
        except PMBenchError as exc:
            self.trade_log.append({
                "type": "order", "ts": self.now_ts, "order_id": None,
                **spec_to_obj(spec), "status": f"rejected:{exc.code}",
            })
            raise

        self.trade_log.append({
            "type": "order", "ts": self.now_ts, "order_id": ack.order_id,
            **spec_to_obj(spec), "status": "accepted",
        })
        for f in ack.fills:
            self.portfolio.apply_fill(f)
            self.fills.append(f)
            self.trade_log.append(_fill_to_obj(f))
        if ack.resting is not None and spec.direction == Direction.BUY:
            reserve = self._maker_reserve(spec.limit_price, ack.resting.remaining)
            self.portfolio.reserve(reserve)
            self.order_reserves[ack.order_id] = reserve
        if ack.no_liquidity:
            self.books.quality.warn(
                f"market order {ack.order_id} found no liquidity in "
                f"{spec.ticker}")
        return {
            "order_id": ack.order_id,
            "fills": [_fill_to_obj(f) for f in ack.fills],
            "filled_qty": sum(f.quantity for f in ack.fills),
            "resting": ack.resting is not None,
            "remaining": ack.resting.remaining if ack.resting else 0,
            "queue_ahead": ack.resting.queue_ahead if ack.resting else None,
            "canceled_qty": ack.canceled_qty,
            "no_liquidity": ack.no_liquidity,
        }

    def cancel_order(self, order_id: int) -> dict:
        ack = self.engine.cancel(order_id, (self.now_ts, self.now_seq))
        self._release_order_reserve(order_id)
        self.trade_log.append({
            "type": "cancel", "ts": self.now_ts, "order_id": order_id,
            "canceled_qty": ack.canceled_qty, "reason": "agent",
        })
        return {"order_id": order_id, "canceled_qty": ack.canceled_qty}


def run_episode(episode: Episode, agent, cfg: SimConfig,
                agent_name: str = "agent", trajectory=None) -> EpisodeResult:
    """Run one agent through one episode; returns the standardized result."""
    cfg.validate()
    episode.validate()
    state = SimState(episode, cfg)
    result = EpisodeResult(
        episode_id=episode.metadata.episode_id,
        bankroll=episode.metadata.bankroll,
        agent_name=agent_name,
    )
    state.trade_log = result.trade_log

    begin = getattr(agent, "begin", None)
    if begin is not None:
        begin(episode.metadata, cfg.rng_seed)

    events = episode.events
    n_events = len(events)
    n_settle = sum(1 for ev in events if isinstance(ev.payload, Settlement))
    settles_done = 0
    start = episode.metadata.start_ts
    decision_ts = start
    sample_ts = start
    step_index = 0
    i = 0
    finished = False

    def sample_equity(ts: int):
        cash = state.portfolio.cash
        pv = state.portfolio.position_value(state.marks)
        result.equity_samples.append(EquitySample(
            ts=ts, equity=cash + pv, cash=cash, position_value=pv))

    def finalize(ts: int):
        for ack in state.engine.cancel_all((ts, state.now_seq)):
            state._release_order_reserve(ack.order_id)
            result.trade_log.append({
                "type": "cancel", "ts": ts, "order_id": ack.order_id,
                "canceled_qty": ack.canceled_qty, "reason": "auto",
            })
        sample_equity(ts)

    try:
        while not finished:
            boundary = min(decision_ts, sample_ts)
            while i < n_events and events[i].ts <= boundary:
                ev = events[i]
                i += 1
                state.apply_event(ev)
                if isinstance(ev.payload, Settlement):
                    settles_done += 1
                    if settles_done == n_settle:
                        finalize(ev.ts)
                        finished = True
                        break
            if finished:
                break
            if i >= n_events and settles_done >= n_settle:
                # stream exhausted without a terminal settlement (empty or
                # settlement-free episodes): nothing further can change
                finalize(max(state.now_ts, boundary))
                break
            if boundary == sample_ts:
                sample_equity(sample_ts)
                sample_ts += cfg.equity_sample_s * 1000
            if boundary == decision_ts:
                state.now_ts = max(state.now_ts, decision_ts)
                ctx = AgentContext(
                    state, step_index=step_index, now_ts=decision_ts,
                    budget=cfg.tool_budget,
                    observer=(trajectory.tool if trajectory else None))
                if trajectory is not None:
                    trajectory.start_step(step_index, decision_ts,
                                          ctx.summary())
                try:
                    agent.step(ctx)
                except (BudgetExhausted, NotInStep):
                    pass  # step ends; benign per budget semantics
                if trajectory is not None:
                    trajectory.end_step(step_index)
                step_index += 1
                result.decision_steps += 1
                decision_ts += cfg.cadence_s * 1000
    except Exception as exc:  # agent misbehavior aborts with partial result
        result.aborted = True
        result.error = f"{type(exc).__name__}: {exc}"
        finalize(state.now_ts)

    finish = getattr(agent, "finish", None)
    if finish is not None:
        try:
            finish()
        except Exception:
            pass
    if trajectory is not None:
        trajectory.flush()

    result.fills = state.fills
    result.order_records = list(state.engine.orders.values())
    result.settlement_records = state.portfolio.settlement_records
    result.warnings = list(state.books.quality.warnings)
    result.data_quality = {
        "crossed_snapshots": state.books.quality.crossed_snapshots,
        "clamped_deltas": state.books.quality.clamped_deltas,
    }
    result.fees_paid = state.portfolio.fees_paid
    result.realized_pnl = state.portfolio.realized_pnl
    result.final_cash = state.portfolio.cash
    return result
