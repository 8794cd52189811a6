import random

import numpy as np
import pytest

from pmbench.agents import (
    BollingerAgent,
    BollingerConfig,
    NullAgent,
    RandomAgent,
    RandomConfig,
    make_agent,
    sma_sigma,
)
from pmbench.episodes import Settlement, TradePrint
from pmbench.errors import PMBenchError
from pmbench.execution import Direction, Liquidity, OrderType, Side, Tif
from pmbench.simulator import SimConfig, run_episode

from conftest import make_episode, snap


def liquid_episode(duration_min=60, episode_id="hand-1"):
    events = [(0, "TKT", snap({48: 500, 47: 500}, {50: 500, 49: 500}))]
    for m in range(5, duration_min, 5):
        events.append((m * 60_000, "TKT", TradePrint(price=48, count=50)))
    events.append((duration_min * 60_000, "TKT", Settlement(outcome="YES")))
    return make_episode(events)


class StubContext:
    """Minimal tool surface for exercising agent sampling logic in
    isolation; positions stay flat and every order is accepted."""

    def __init__(self):
        self.orders = []
        self.done_called = False

    def get_markets(self):
        return [{"ticker": "TKT", "status": "open", "yes_bid": 48,
                 "yes_ask": 50, "bid_sz": 10, "ask_sz": 10, "last": None,
                 "time_to_settlement_s": 100}]

    def get_positions(self):
        return {"positions": []}

    def place_order(self, spec):
        self.orders.append(spec)
        return {"order_id": len(self.orders), "fills": [], "filled_qty": 0,
                "resting": False, "remaining": 0, "queue_ahead": None,
                "canceled_qty": 0, "no_liquidity": False}

    def done(self):
        self.done_called = True


class FakeMeta:
    episode_id = "ep-1"


class TestRandomAgent:
    def replica_orders(self, n_steps, cfg, seed=0, episode_id="ep-1"):
        """Independent reimplementation of the documented draw order."""
        rng = random.Random(f"{seed}:{episode_id}")
        orders = []
        for _ in range(n_steps):
            if rng.random() >= cfg.trade_prob:
                continue
            rng.randrange(1)  # market choice among 1 quoted market
            side = "YES" if rng.randrange(2) == 0 else "NO"
            direction = "BUY" if rng.randrange(2) == 0 else "SELL"
            qty = rng.randint(cfg.min_qty, cfg.max_qty)
            orders.append((side, direction, qty))
        return orders

    def test_matches_documented_draw_order(self):
        cfg = RandomConfig()
        agent = RandomAgent(cfg)
        agent.begin(FakeMeta(), 0)
        stubs = []
        for _ in range(400):
            ctx = StubContext()
            agent.step(ctx)
            stubs.extend(ctx.orders)
        expected = self.replica_orders(400, cfg)
        got = [(s.side.value, s.direction.value, s.quantity) for s in stubs]
        assert got == expected
        assert len(got) > 0

    def test_trade_prob_zero_never_trades(self):
        agent = RandomAgent(RandomConfig(trade_prob=0.0))
        agent.begin(FakeMeta(), 7)
        for _ in range(50):
            ctx = StubContext()
            agent.step(ctx)
            assert ctx.orders == []
            assert ctx.done_called

    def test_orders_are_market_ioc(self):
        agent = RandomAgent(RandomConfig(trade_prob=1.0))
        agent.begin(FakeMeta(), 3)
        ctx = StubContext()
        agent.step(ctx)
        (spec,) = ctx.orders
        assert spec.order_type == OrderType.MARKET
        assert spec.tif == Tif.IOC

    def test_seed_and_episode_determine_stream(self):
        def orders(seed, episode_id):
            agent = RandomAgent(RandomConfig(trade_prob=1.0))
            meta = FakeMeta()
            meta.episode_id = episode_id
            agent.begin(meta, seed)
            out = []
            for _ in range(20):
                ctx = StubContext()
                agent.step(ctx)
                out.extend((s.side, s.direction, s.quantity)
                           for s in ctx.orders)
            return out

        assert orders(1, "a") == orders(1, "a")
        assert orders(1, "a") != orders(2, "a")
        assert orders(1, "a") != orders(1, "b")

    def test_position_cap_never_violated_in_sim(self):
        ep = liquid_episode()
        cfg = RandomConfig(trade_prob=1.0, position_cap=4)
        result = run_episode(ep, RandomAgent(cfg), SimConfig(rng_seed=5))
        net = 0
        for f in result.fills:
            delta = f.quantity if f.side == Side.YES else -f.quantity
            if f.direction == Direction.SELL:
                delta = -delta
            net += delta
            assert abs(net) <= cfg.position_cap

    def test_deterministic_end_to_end(self):
        ep = liquid_episode()
        runs = [run_episode(ep, RandomAgent(RandomConfig(trade_prob=0.8)),
                            SimConfig(rng_seed=11)) for _ in range(2)]
        assert runs[0].trade_log == runs[1].trade_log
        assert runs[0].equity_curve == runs[1].equity_curve


def bollinger_episode(mids_hc, episode_id="hand-1"):
    """One snapshot right before each decision tick so the agent sees the
    scripted sequence of mids (half-cents, even values only)."""
    events = []
    for i, mid in enumerate(mids_hc):
        c = mid // 2
        events.append((max(0, i * 300_000 - 1_000), "TKT",
                       snap({c - 1: 500}, {100 - (c + 1): 500})))
    from conftest import T0
    end = (len(mids_hc) + 1) * 300_000
    events.append((end, "TKT", Settlement(outcome="YES")))
    return make_episode(events, end=T0 + end)


class TestBollingerAgent:
    def test_signal_matches_numpy_reference(self):
        cfg = BollingerConfig(period=5, k=1.5)
        agent = BollingerAgent(cfg)
        rng = random.Random(99)
        mids = [rng.randrange(60, 140) for _ in range(60)]
        signals = [agent._signal("T", m) for m in mids]

        hist = []
        prev = None
        expected = []
        for m in mids:
            hist.append(m)
            hist = hist[-cfg.period:]
            if len(hist) < cfg.period:
                expected.append(None)
                prev = None
                continue
            arr = np.asarray(hist, dtype=float)
            lower = arr.mean() - cfg.k * arr.std()
            upper = arr.mean() + cfg.k * arr.std()
            sig = None
            if prev is not None:
                pm, pl, pu = prev
                if pm >= pl and m < lower:
                    sig = "buy"
                elif pm <= pu and m > upper:
                    sig = "sell"
            expected.append(sig)
            prev = (m, lower, upper)
        assert signals == expected
        assert any(s is not None for s in signals)

    def test_sma_sigma_population(self):
        window = [1, 2, 3, 4]
        mean, sigma = sma_sigma(window)
        assert mean == 2.5
        assert sigma == pytest.approx(np.std(window))

    def test_lower_band_crossing_buys_at_bid(self):
        mids = [100] * 20 + [78]
        ep = bollinger_episode(mids)
        result = run_episode(ep, BollingerAgent(), SimConfig())
        orders = [r for r in result.trade_log if r["type"] == "order"]
        assert len(orders) == 1
        o = orders[0]
        assert (o["direction"], o["side"]) == ("BUY", "YES")
        assert o["order_type"] == "LIMIT" and o["tif"] == "GTC"
        assert o["limit_price"] == 78 // 2 - 1  # joins the displayed bid
        assert o["quantity"] == BollingerConfig().order_qty
        assert o["ts"] == ep.metadata.start_ts + 20 * 300_000

    def test_upper_crossing_when_flat_buys_no(self):
        mids = [100] * 20 + [122]
        ep = bollinger_episode(mids)
        result = run_episode(ep, BollingerAgent(), SimConfig())
        orders = [r for r in result.trade_log if r["type"] == "order"]
        assert len(orders) == 1
        o = orders[0]
        assert (o["direction"], o["side"]) == ("BUY", "NO")
        assert o["limit_price"] == 100 - (122 // 2 + 1)

    def test_no_signal_before_full_window(self):
        mids = [100] * 10 + [60]
        ep = bollinger_episode(mids)
        result = run_episode(ep, BollingerAgent(), SimConfig())
        assert [r for r in result.trade_log if r["type"] == "order"] == []

    def test_replaces_stale_order_on_new_signal(self):
        # two consecutive lower-band crossings: second replaces the first
        mids = [100] * 20 + [78, 100, 100, 60]
        ep = bollinger_episode(mids)
        result = run_episode(ep, BollingerAgent(), SimConfig())
        orders = [r for r in result.trade_log if r["type"] == "order"]
        cancels = [r for r in result.trade_log
                   if r["type"] == "cancel" and r["reason"] == "agent"]
        assert len(orders) == 2
        assert len(cancels) == 1

    def test_only_limit_gtc_orders_ever(self):
        rng = random.Random(5)
        mids = [100 + rng.randrange(-30, 31) for _ in range(50)]
        ep = bollinger_episode(mids)
        result = run_episode(ep, BollingerAgent(), SimConfig())
        for r in result.trade_log:
            if r["type"] == "order":
                assert r["order_type"] == "LIMIT"
                assert r["tif"] == "GTC"
        for f in result.fills:
            assert f.liquidity == Liquidity.MAKER


class TestFactory:
    def test_known_names(self):
        assert isinstance(make_agent("null"), NullAgent)
        assert isinstance(make_agent("random"), RandomAgent)
        assert isinstance(make_agent("bollinger"), BollingerAgent)

    def test_unknown_name(self):
        with pytest.raises(PMBenchError):
            make_agent("mystery")

    def test_kwargs_forwarded(self):
        agent = make_agent("random", trade_prob=0.5)
        assert agent.cfg.trade_prob == 0.5
