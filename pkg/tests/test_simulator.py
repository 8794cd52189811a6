import pytest

from pmbench.agents import NullAgent
from pmbench.episodes import Lifecycle, Settlement, TradePrint
from pmbench.errors import (
    InsufficientFunds,
    InsufficientPosition,
    InvalidConfig,
    MarketClosed,
    UnknownTicker,
    UnsupportedTif,
)
from pmbench.execution import (
    Direction,
    Liquidity,
    OrderSpec,
    OrderType,
    Side,
    Tif,
)
from pmbench.simulator import SimConfig, run_episode
from pmbench.units import MICRO_PER_USD

from conftest import T0, make_episode, snap


class Scripted:
    """Runs a callable for selected step indices, then ends the step."""

    def __init__(self, script):
        self.script = script
        self.steps_seen = []

    def step(self, ctx):
        self.steps_seen.append((ctx.step_index, ctx.now_ts))
        fn = self.script.get(ctx.step_index)
        if fn is not None:
            fn(ctx)
        ctx.done()


def market_buy(qty, ticker="TKT", side=Side.YES):
    return OrderSpec(ticker=ticker, side=side, direction=Direction.BUY,
                     order_type=OrderType.MARKET, quantity=qty, tif=Tif.IOC)


def limit_order(price, qty, ticker="TKT", direction=Direction.BUY,
                side=Side.YES, tif=Tif.GTC):
    return OrderSpec(ticker=ticker, side=side, direction=direction,
                     order_type=OrderType.LIMIT, limit_price=price,
                     quantity=qty, tif=tif)


@pytest.fixture
def hour_episode():
    """Liquid single-ticker hour with prints every 5 minutes."""
    events = [(0, "TKT", snap({48: 100, 47: 100}, {50: 100, 49: 100}))]
    for m in range(5, 60, 5):
        events.append((m * 60_000, "TKT", TradePrint(price=48, count=20)))
    events.append((3_600_000, "TKT", Settlement(outcome="YES")))
    return make_episode(events)


class TestScheduling:
    def test_hour_at_default_cadence_gives_twelve_steps(self, hour_episode):
        agent = Scripted({})
        result = run_episode(hour_episode, agent, SimConfig())
        assert result.decision_steps == 12
        assert [s for s, _ in agent.steps_seen] == list(range(12))
        assert agent.steps_seen[0][1] == T0
        assert agent.steps_seen[-1][1] == T0 + 55 * 60_000

    def test_equity_grid_plus_final_sample(self, hour_episode):
        result = run_episode(hour_episode, NullAgent(), SimConfig())
        assert len(result.equity_samples) == 61
        assert result.equity_samples[0].ts == T0
        assert result.equity_samples[-2].ts == T0 + 59 * 60_000
        assert result.equity_samples[-1].ts == T0 + 3_600_000

    def test_null_agent_keeps_bankroll_exactly(self, hour_episode):
        result = run_episode(hour_episode, NullAgent(), SimConfig())
        bank = hour_episode.metadata.bankroll
        assert all(s.equity == bank for s in result.equity_samples)
        assert result.final_cash == bank
        assert result.fills == []

    def test_invalid_config_rejected(self, hour_episode):
        with pytest.raises(InvalidConfig):
            run_episode(hour_episode, NullAgent(), SimConfig(cadence_s=0))

    def test_no_lookahead_at_decision_tick(self):
        """A snapshot 1 ms after a tick must not be visible at that tick."""
        ep = make_episode([
            (0, "TKT", snap({48: 10}, {50: 10})),
            (300_001, "TKT", snap({10: 10}, {88: 10})),
            (3_600_000, "TKT", Settlement(outcome="YES")),
        ])
        seen = {}

        def look(ctx):
            seen[ctx.step_index] = ctx.get_orderbook("TKT")["yes_bids"]

        run_episode(ep, Scripted({1: look, 2: look}), SimConfig())
        assert seen[1] == [[48, 10]]
        assert seen[2] == [[10, 10]]


class TestTrading:
    def test_market_ioc_taker_fill(self, hour_episode):
        agent = Scripted({0: lambda ctx: ctx.place_order(market_buy(5))})
        result = run_episode(hour_episode, agent, SimConfig())
        assert len(result.fills) == 1
        f = result.fills[0]
        assert (f.price, f.quantity, f.liquidity) == (50, 5, Liquidity.TAKER)
        assert result.fees_paid == f.fee > 0

    def test_resting_buy_filled_by_later_print(self, hour_episode):
        # join the bid at 48; queue ahead is the displayed 100, so the
        # first 100 printed contracts at 48 go to the queue, later ones fill
        agent = Scripted({0: lambda ctx: ctx.place_order(limit_order(48, 5))})
        result = run_episode(hour_episode, agent, SimConfig())
        maker = [f for f in result.fills if f.liquidity == Liquidity.MAKER]
        assert len(maker) == 1
        f = maker[0]
        assert (f.price, f.quantity) == (48, 5)
        # prints land at 5, 10, ... minutes; 100 ahead consumed by the
        # first five prints of 20, fill on the sixth at minute 30
        assert f.ts == T0 + 30 * 60_000

    def test_accounting_identity_each_sample(self, hour_episode):
        agent = Scripted({
            0: lambda ctx: ctx.place_order(market_buy(5)),
            3: lambda ctx: ctx.place_order(limit_order(48, 5)),
        })
        result = run_episode(hour_episode, agent, SimConfig())
        for s in result.equity_samples:
            assert s.equity == s.cash + s.position_value

    def test_rejected_order_logged_not_counted(self, hour_episode):
        bank = hour_episode.metadata.bankroll

        def overspend(ctx):
            # worst-case limit cost is checked up front
            with pytest.raises(InsufficientFunds):
                ctx.place_order(limit_order(50, 1_000_000, tif=Tif.IOC))

        result = run_episode(hour_episode, Scripted({0: overspend}),
                             SimConfig())
        rejected = [r for r in result.trade_log
                    if r["type"] == "order" and r["status"].startswith("rejected")]
        assert len(rejected) == 1
        assert rejected[0]["status"] == "rejected:InsufficientFunds"
        assert result.order_records == []
        assert result.final_cash == bank

    def test_sell_without_position_rejected(self, hour_episode):
        def sell(ctx):
            with pytest.raises(InsufficientPosition):
                ctx.place_order(limit_order(48, 1, direction=Direction.SELL,
                                            tif=Tif.IOC))

        result = run_episode(hour_episode, Scripted({0: sell}), SimConfig())
        assert result.fills == []

    def test_unknown_ticker_rejected(self, hour_episode):
        def bad(ctx):
            with pytest.raises(UnknownTicker):
                ctx.place_order(market_buy(1, ticker="NOPE"))

        run_episode(hour_episode, Scripted({0: bad}), SimConfig())

    def test_taker_only_mode_rejects_gtc(self, hour_episode):
        def gtc(ctx):
            with pytest.raises(UnsupportedTif):
                ctx.place_order(limit_order(48, 1))

        result = run_episode(hour_episode, Scripted({0: gtc}),
                             SimConfig(execution_mode="taker_only"))
        assert result.fills == []

    def test_resting_reserve_frees_cash_on_cancel(self, hour_episode):
        bank = hour_episode.metadata.bankroll
        observed = {}

        def place(ctx):
            ack = ctx.place_order(limit_order(40, 10))
            observed["order_id"] = ack["order_id"]
            observed["after_place"] = ctx.get_positions()

        def cancel(ctx):
            ctx.cancel_order(observed["order_id"])
            observed["after_cancel"] = ctx.get_positions()

        result = run_episode(hour_episode, Scripted({0: place, 1: cancel}),
                             SimConfig())
        assert observed["after_place"]["reserved_micro_usd"] > 0
        assert observed["after_cancel"]["reserved_micro_usd"] == 0
        assert result.final_cash == bank


class TestSettlementAndClose:
    def two_ticker(self):
        return make_episode([
            (0, "A", snap({48: 50}, {50: 50})),
            (0, "B", snap({30: 50}, {68: 50})),
            (1_800_000, "A", Settlement(outcome="YES")),
            (3_600_000, "B", Settlement(outcome="NO")),
        ], tickers=("A", "B"))

    def test_midstream_settlement_pays_and_closes(self):
        ep = self.two_ticker()
        results = {}

        def buy_a(ctx):
            ctx.place_order(market_buy(10, ticker="A"))

        def check(ctx):
            results["markets"] = {m["ticker"]: m["status"]
                                  for m in ctx.get_markets()}
            results["positions"] = ctx.get_positions()

        res = run_episode(ep, Scripted({0: buy_a, 7: check}), SimConfig())
        assert results["markets"] == {"A": "settled", "B": "open"}
        assert results["positions"]["positions"] == []  # A removed at settle
        # 10 YES bought at 50 pay out $10 on YES
        assert res.realized_pnl == 10 * MICRO_PER_USD - 10 * 50 * 10_000 \
            - res.fees_paid
        assert len(res.settlement_records) == 2

    def test_orders_on_settled_ticker_rejected(self):
        ep = self.two_ticker()

        def late(ctx):
            with pytest.raises(MarketClosed):
                ctx.place_order(market_buy(1, ticker="A"))

        run_episode(ep, Scripted({7: late}), SimConfig())

    def test_resting_orders_auto_canceled_at_settlement(self):
        ep = self.two_ticker()
        res = run_episode(
            ep, Scripted({0: lambda c: c.place_order(
                limit_order(40, 5, ticker="A"))}),
            SimConfig())
        cancels = [r for r in res.trade_log if r["type"] == "cancel"]
        assert len(cancels) == 1
        assert cancels[0]["reason"] == "auto"
        assert cancels[0]["ts"] == T0 + 1_800_000

    def test_lifecycle_close_freezes_mark_and_blocks_orders(self):
        ep = make_episode([
            (0, "TKT", snap({48: 50}, {50: 50})),
            (600_000, "TKT", Lifecycle(status="closed")),
            (900_000, "TKT", snap({10: 50}, {88: 50})),
            (3_600_000, "TKT", Settlement(outcome="YES")),
        ])
        marks = {}

        def buy(ctx):
            ctx.place_order(market_buy(10))

        def closed(ctx):
            with pytest.raises(MarketClosed):
                ctx.place_order(market_buy(1))
            marks["equity"] = ctx.get_positions()["equity_micro_usd"]

        res = run_episode(ep, Scripted({0: buy, 4: closed}), SimConfig())
        # mark stays at the pre-close 49c mid despite the later snapshot
        bank = ep.metadata.bankroll
        buy_fee = res.fills[0].fee
        expected_pv = 10 * 98 * 5_000
        assert marks["equity"] == bank - 10 * 50 * 10_000 - buy_fee \
            + expected_pv
        # settlement still pays out on YES
        assert res.settlement_records[0].outcome == "YES"

    def test_terminates_at_last_settlement(self):
        ep = make_episode([
            (0, "TKT", snap({48: 50}, {50: 50})),
            (600_000, "TKT", Settlement(outcome="NO")),
        ])
        res = run_episode(ep, NullAgent(), SimConfig())
        assert res.equity_samples[-1].ts == T0 + 600_000
        assert res.decision_steps == 2  # ticks at 0 and 5 minutes


class TestRobustness:
    def test_agent_exception_aborts_with_partial_result(self, hour_episode):
        class Exploder:
            def step(self, ctx):
                if ctx.step_index == 2:
                    raise RuntimeError("boom")
                ctx.done()

        res = run_episode(hour_episode, Exploder(), SimConfig())
        assert res.aborted
        assert "boom" in res.error
        assert res.decision_steps == 2
        assert res.equity_samples  # partial curve retained

    def test_budget_exhaustion_is_benign(self, hour_episode):
        class Greedy:
            def step(self, ctx):
                while True:
                    ctx.get_markets()

        res = run_episode(hour_episode, Greedy(),
                          SimConfig(max_tool_rounds=1, calls_per_round=4))
        assert not res.aborted
        assert res.decision_steps == 12

    def test_determinism_across_runs(self, hour_episode):
        def run():
            agent = Scripted({
                0: lambda ctx: ctx.place_order(market_buy(3)),
                2: lambda ctx: ctx.place_order(limit_order(48, 4)),
                5: lambda ctx: ctx.place_order(
                    limit_order(48, 2, direction=Direction.SELL, tif=Tif.IOC)),
            })
            return run_episode(hour_episode, agent, SimConfig())

        r1, r2 = run(), run()
        assert r1.trade_log == r2.trade_log
        assert r1.equity_samples == r2.equity_samples
        assert r1.final_cash == r2.final_cash

    def test_finish_hook_called(self, hour_episode):
        calls = []

        class WithHooks(Scripted):
            def begin(self, metadata, seed):
                calls.append(("begin", metadata.episode_id, seed))

            def finish(self):
                calls.append(("finish",))

        run_episode(hour_episode, WithHooks({}), SimConfig(rng_seed=9))
        assert calls[0] == ("begin", "hand-1", 9)
        assert calls[-1] == ("finish",)
