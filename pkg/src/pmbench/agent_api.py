"""The tool context every agent observes and acts through.

One AgentContext is valid for a single decision tick on the simulator
thread. Reads and actions are JSON-ready dicts so the same surface serves
in-process agents, trajectory logging, and the stdio bridge. Every tool
call is charged against the per-step budget.
"""

from __future__ import annotations

from typing import Optional

from .errors import BudgetExhausted, NotInStep
from .execution import Direction, OrderSpec, OrderType, Side, Tif


def spec_from_args(args: dict) -> OrderSpec:
    """Build an OrderSpec from a plain JSON-style dict (bridge wire form)."""
    return OrderSpec(
        ticker=args["ticker"],
        side=Side(args["side"]),
        direction=Direction(args["direction"]),
        order_type=OrderType(args["order_type"]),
        quantity=int(args["quantity"]),
        tif=Tif(args["tif"]),
        limit_price=(None if args.get("limit_price") is None
                     else int(args["limit_price"])),
    )


def spec_to_obj(spec: OrderSpec) -> dict:
    return {
        "ticker": spec.ticker,
        "side": spec.side.value,
        "direction": spec.direction.value,
        "order_type": spec.order_type.value,
        "limit_price": spec.limit_price,
        "quantity": spec.quantity,
        "tif": spec.tif.value,
    }


class AgentContext:
    """Capability handle bound to the current decision tick."""

    def __init__(self, state, step_index: int, now_ts: int, budget: int,
                 observer=None):
        self._state = state
        self.step_index = step_index
        self.now_ts = now_ts
        self.budget = budget
        self.tool_calls_used = 0
        self._done = False
        self._observer = observer

    # -- budget plumbing -----------------------------------------------------

    def _charge(self, tool: str):
        if self._done:
            raise NotInStep(f"{tool}: step already ended by done()")
        if self.tool_calls_used >= self.budget:
            raise BudgetExhausted(
                f"{tool}: tool budget of {self.budget} calls exhausted")
        self.tool_calls_used += 1

    def _record(self, tool: str, args: dict, result, error=None):
        if self._observer is not None:
            self._observer(tool, args, result, error)

    def _call(self, tool: str, args: dict, fn):
        self._charge(tool)
        try:
            result = fn()
        except Exception as exc:
            self._record(tool, args, None, exc)
            raise
        self._record(tool, args, result)
        return result

    @property
    def done_called(self) -> bool:
        return self._done

    # -- observations ----------------------------------------------------------

    def summary(self) -> dict:
        """Step summary (not charged against the budget)."""
        return self._state.step_summary(self.step_index, self.now_ts)

    def get_markets(self) -> list:
        return self._call("get_markets", {}, self._state.market_summaries)

    def get_orderbook(self, ticker: str, depth: Optional[int] = None) -> dict:
        if depth is not None and depth < 1:
            raise ValueError(f"depth must be >= 1, got {depth}")
        return self._call("get_orderbook", {"ticker": ticker, "depth": depth},
                          lambda: self._state.orderbook_view(ticker, depth))

    def get_positions(self) -> dict:
        return self._call("get_positions", {}, self._state.positions_view)

    def get_orders(self) -> list:
        return self._call("get_orders", {}, self._state.open_orders_view)

    # -- actions ---------------------------------------------------------------

    def place_order(self, spec: OrderSpec) -> dict:
        return self._call("place_order", spec_to_obj(spec),
                          lambda: self._state.place_order(spec))

    def cancel_order(self, order_id: int) -> dict:
        return self._call("cancel_order", {"order_id": order_id},
                          lambda: self._state.cancel_order(order_id))

    def done(self):
        """End the step immediately, regardless of remaining budget."""
        if self._done:
            raise NotInStep("done() already called this step")
        self._done = True
        self._record("done", {}, None)
