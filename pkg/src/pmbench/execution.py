"""Order matching against replayed liquidity, plus the per-fill fee model.

Taker orders walk the opposing displayed depth immediately; maker (resting
GTC/POST_ONLY) orders fill only when historical trade prints arrive at or
through their limit (trade_only queue mode). Agent orders never alter the
historical stream; consumed displayed depth is local and is refreshed by
the next snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .book import Book, BookSet
from .errors import (
    AlreadyFilled,
    InvalidSpec,
    UnknownOrder,
    UnsupportedTif,
    WouldCross,
)
from .units import MICRO_PER_CENT, div_round_half_up, valid_price


class Side(str, Enum):
    YES = "YES"
    NO = "NO"


class Direction(str, Enum):
    BUY = "BUY"
    SELL = "SELL"


class OrderType(str, Enum):
    MARKET = "MARKET"
    LIMIT = "LIMIT"


class Tif(str, Enum):
    IOC = "IOC"
    GTC = "GTC"
    POST_ONLY = "POST_ONLY"


class Liquidity(str, Enum):
    MAKER = "MAKER"
    TAKER = "TAKER"


@dataclass(frozen=True)
class OrderSpec:
    ticker: str
    side: Side
    direction: Direction
    order_type: OrderType
    quantity: int
    tif: Tif
    limit_price: Optional[int] = None

    def validate(self):
        if self.quantity < 1:
            raise InvalidSpec("quantity must be >= 1")
        if self.order_type == OrderType.LIMIT:
            if self.limit_price is None or not valid_price(self.limit_price):
                raise InvalidSpec("LIMIT requires limit_price in 1..99")
        else:
            if self.limit_price is not None:
                raise InvalidSpec("MARKET forbids limit_price")
            if self.tif == Tif.POST_ONLY:
                raise InvalidSpec("MARKET forbids POST_ONLY")
            if self.tif == Tif.GTC:
                raise InvalidSpec("MARKET cannot rest; use IOC")


@dataclass(frozen=True)
class FeeModel:
    taker_rate_bp: int = 700
    maker_rate_bp: int = 175

    def rate(self, liquidity: Liquidity) -> int:
        return (self.taker_rate_bp if liquidity == Liquidity.TAKER
                else self.maker_rate_bp)


def fee(model: FeeModel, liquidity: Liquidity, price: int, qty: int) -> int:
    """Per-fill fee in micro-USD: round_half_up(rate_bp * p * (100-p) * qty / 100).

    The quadratic p*(100-p) form makes fees largest at 50c and symmetric
    around it; at 50c one taker contract costs 17,500 micro-USD (1.75c)
    and one maker contract 4,375 micro-USD (0.4375c).
    """
    if not valid_price(price) or qty < 1:
        raise InvalidSpec(f"fee: bad price {price} or qty {qty}")
    return div_round_half_up(model.rate(liquidity) * price * (100 - price) * qty, 100)


@dataclass
class RestingOrder:
    order_id: int
    spec: OrderSpec
    remaining: int
    queue_ahead: int
    placed_at: tuple  # (ts, seq)


@dataclass(frozen=True)
class Fill:
    order_id: int
    ticker: str
    side: Side
    direction: Direction
    price: int
    quantity: int
    liquidity: Liquidity
    fee: int
    ts: int
    mid_at_submit: Optional[int] = None  # half-cents, in the order side's terms


class OrderStatus(str, Enum):
    OPEN = "OPEN"
    FILLED = "FILLED"
    CANCELED = "CANCELED"


@dataclass
class OrderRecord:
    order_id: int
    spec: OrderSpec
    ts: int
    submitted_qty: int
    filled_qty: int = 0
    canceled_qty: int = 0
    status: OrderStatus = OrderStatus.OPEN


@dataclass
class OrderAck:
    order_id: int
    fills: list
    resting: Optional[RestingOrder]
    canceled_qty: int = 0
    no_liquidity: bool = False


@dataclass
class CancelAck:
    order_id: int
    canceled_qty: int


# --- taker matching ---------------------------------------------------------

def _opposing_levels(book: Book, side: Side, direction: Direction):
    """Best-first (price_in_own_side_cents, stored_key, store) triples."""
    if direction == Direction.BUY:
        store = book.no_bids if side == Side.YES else book.yes_bids
        levels = sorted((100 - q, q) for q in store)  # derived asks, ascending
    else:
        store = book.yes_bids if side == Side.YES else book.no_bids
        levels = sorted(((q, q) for q in store), reverse=True)  # bids, descending
    return [(p, q, store) for p, q in levels]


def _price_ok(spec: OrderSpec, price: int) -> bool:
    if spec.order_type == OrderType.MARKET:
        return True
    if spec.direction == Direction.BUY:
        return price <= spec.limit_price
    return price >= spec.limit_price


def match_taker(book: Book, spec: OrderSpec, model: FeeModel,
                order_id: int = 0, ts: int = 0,
                mid_at_submit: Optional[int] = None,
                mutate: bool = True):
    """Walk opposing displayed depth best-price-first.

    Returns (fills, remainder). When mutate is True the consumed depth is
    decremented in the book (refreshed by the next snapshot).
    """
    spec.validate()
    remaining = spec.quantity
    fills = []
    for price, key, store in _opposing_levels(book, spec.side, spec.direction):
        if remaining == 0 or not _price_ok(spec, price):
            break
        take = min(remaining, store[key])
        if take == 0:
            continue
        fills.append(Fill(
            order_id=order_id, ticker=spec.ticker, side=spec.side,
            direction=spec.direction, price=price, quantity=take,
            liquidity=Liquidity.TAKER,
            fee=fee(model, Liquidity.TAKER, price, take),
            ts=ts, mid_at_submit=mid_at_submit,
        ))
        remaining -= take
        if mutate:
            left = store[key] - take
            if left == 0:
                del store[key]
            else:
                store[key] = left
    return fills, remaining


def _would_cross(book: Book, spec: OrderSpec) -> bool:
    levels = _opposing_levels(book, spec.side, spec.direction)
    return bool(levels) and _price_ok(spec, levels[0][0])


def join_level_count(book: Book, spec: OrderSpec) -> int:
    """Displayed count at the level a resting order joins (its own side)."""
    lp = spec.limit_price
    if spec.direction == Direction.BUY:
        store = book.yes_bids if spec.side == Side.YES else book.no_bids
        return store.get(lp, 0)
    # a resting SELL at L is the complementary side's bid at 100 - L
    store = book.no_bids if spec.side == Side.YES else book.yes_bids
    return store.get(100 - lp, 0)


def _print_at_or_through(spec: OrderSpec, print_price: int) -> bool:
    """Is a YES-priced trade print at or through this resting order's limit?"""
    lp = spec.limit_price
    if spec.side == Side.YES:
        return (print_price <= lp if spec.direction == Direction.BUY
                else print_price >= lp)
    # NO-side limit in NO cents; the print's NO price is 100 - print_price
    return (100 - print_price <= lp if spec.direction == Direction.BUY
            else 100 - print_price >= lp)


class ExecutionEngine:
    """Owns agent order state for one episode (single-threaded)."""

    def __init__(self, books: BookSet, model: FeeModel,
                 execution_mode: str = "maker_taker",
                 maker_queue_mode: str = "trade_only"):
        self.books = books
        self.model = model
        self.execution_mode = execution_mode
        self.maker_queue_mode = maker_queue_mode
        self.resting: dict = {}  # order_id -> RestingOrder, insertion-ordered
        self.orders: dict = {}   # order_id -> OrderRecord
        self._next_order_id = 1

    def place(self, spec: OrderSpec, now: tuple,
              mid_at_submit: Optional[int] = None) -> OrderAck:
        spec.validate()
        if self.execution_mode == "taker_only" and spec.tif != Tif.IOC:
            raise UnsupportedTif(
                f"taker_only mode rejects {spec.tif.value} orders")
        book = self.books.book(spec.ticker)

        if spec.tif == Tif.POST_ONLY:
            if _would_cross(book, spec):
                raise WouldCross(
                    f"POST_ONLY {spec.direction.value} {spec.side.value} "
                    f"{spec.limit_price}c would cross")
            fills, remainder = [], spec.quantity
        else:
            fills, remainder = match_taker(
                book, spec, self.model, order_id=self._next_order_id,
                ts=now[0], mid_at_submit=mid_at_submit)

        order_id = self._next_order_id
        self._next_order_id += 1
        rec = OrderRecord(order_id=order_id, spec=spec, ts=now[0],
                          submitted_qty=spec.quantity,
                          filled_qty=spec.quantity - remainder)
        self.orders[order_id] = rec

        resting = None
        canceled_qty = 0
        if remainder == 0:
            rec.status = OrderStatus.FILLED
        elif spec.tif == Tif.IOC:
            canceled_qty = remainder
            rec.canceled_qty = remainder
            rec.status = OrderStatus.CANCELED if rec.filled_qty == 0 else OrderStatus.FILLED
        else:  # GTC / POST_ONLY remainder rests
            resting = RestingOrder(
                order_id=order_id, spec=spec, remaining=remainder,
                queue_ahead=join_level_count(book, spec), placed_at=now)
            self.resting[order_id] = resting

        no_liquidity = (spec.order_type == OrderType.MARKET and not fills)
        return OrderAck(order_id=order_id, fills=fills, resting=resting,
                        canceled_qty=canceled_qty, no_liquidity=no_liquidity)

    def on_trade_print(self, ticker: str, price: int, count: int,
                       ts: int) -> list:
        """Maker fills driven by one historical trade print (trade_only mode).

        Each resting order's queue is decremented by the full print volume
        first; residual volume fills, and total fills from one print never
        exceed the print count.
        """
        fills = []
        budget = count
        for order in list(self.resting.values()):
            if order.spec.ticker != ticker:
                continue
            if not _print_at_or_through(order.spec, price):
                continue
            dec = min(order.queue_ahead, count)
            order.queue_ahead -= dec
            residual = count - dec
            take = min(residual, order.remaining, budget)
            if take <= 0:
                continue
            budget -= take
            order.remaining -= take
            rec = self.orders[order.order_id]
            rec.filled_qty += take
            fills.append(Fill(
                order_id=order.order_id, ticker=ticker, side=order.spec.side,
                direction=order.spec.direction, price=order.spec.limit_price,
                quantity=take, liquidity=Liquidity.MAKER,
                fee=fee(self.model, Liquidity.MAKER, order.spec.limit_price, take),
                ts=ts,
            ))
            if order.remaining == 0:
                rec.status = OrderStatus.FILLED
                del self.resting[order.order_id]
        return fills

    def cancel(self, order_id: int, now: tuple) -> CancelAck:
        if order_id not in self.orders:
            raise UnknownOrder(f"order {order_id} unknown")
        order = self.resting.pop(order_id, None)
        if order is None:
            raise AlreadyFilled(f"order {order_id} is not resting")
        rec = self.orders[order_id]
        rec.canceled_qty += order.remaining
        rec.status = OrderStatus.CANCELED
        return CancelAck(order_id=order_id, canceled_qty=order.remaining)

    def cancel_all(self, now: tuple, ticker: Optional[str] = None) -> list:
        acks = []
        for order_id in [oid for oid, o in self.resting.items()
                         if ticker is None or o.spec.ticker == ticker]:
            acks.append(self.cancel(order_id, now))
        return acks

    def open_orders(self, ticker: Optional[str] = None) -> list:
        return [o for o in self.resting.values()
                if ticker is None or o.spec.ticker == ticker]
