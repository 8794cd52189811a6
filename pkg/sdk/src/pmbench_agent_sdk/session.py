"""Client side of the bridge protocol (PROTOCOL.md, version "1").

Agent authors write one step handler; the session owns the handshake,
the message loop, typed tool wrappers, and the automatic done. The SDK
is a pure protocol client: no engine logic is duplicated here.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from typing import Callable, Optional

PROTOCOL_VERSION = "1"


class SdkError(Exception):
    """Base for everything the SDK raises."""


class TransportClosed(SdkError):
    """The host closed the connection outside a clean bye."""


class ProtocolMismatch(SdkError):
    """The host speaks an unsupported protocol version."""


class UnexpectedMessage(SdkError):
    """The host sent a message the protocol does not allow here."""


class ToolError(SdkError):
    """A tool call was rejected by the host."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class BudgetExhaustedError(ToolError):
    """The per-step tool budget is spent; further calls keep failing."""


def _tool_error(code: str, message: str) -> ToolError:
    if code == "BudgetExhausted":
        return BudgetExhaustedError(code, message)
    return ToolError(code, message)


class Transport:
    """Line-delimited JSON over a reader/writer pair (stdin/stdout by
    default)."""

    def __init__(self, reader=None, writer=None):
        self._reader = reader if reader is not None else sys.stdin
        self._writer = writer if writer is not None else sys.stdout

    def send(self, obj: dict):
        self._writer.write(json.dumps(obj, separators=(",", ":")) + "\n")
        self._writer.flush()

    def recv(self) -> dict:
        while True:
            line = self._reader.readline()
            if not line:
                raise TransportClosed("host closed the connection")
            line = line.strip()
            if not line:
                continue
            try:
                msg = json.loads(line)
            except json.JSONDecodeError as exc:
                raise UnexpectedMessage(f"host sent malformed JSON: {exc}")
            if not isinstance(msg, dict) or "type" not in msg:
                raise UnexpectedMessage("host message lacks a 'type'")
            return msg


@dataclass(frozen=True)
class Session:
    """What the host announced at handshake."""
    episode_id: str
    seed: int
    tickers: tuple
    bankroll_micro_usd: int
    engine: str


class StepContext:
    """Typed tool surface for one decision step.

    Exactly one tool call is in flight at a time (the transport is
    synchronous) and done() is idempotent: only the first call emits a
    message.
    """

    def __init__(self, transport: Transport, step_id: int, summary: dict,
                 session: Session):
        self._transport = transport
        self.step_id = step_id
        self.summary = summary
        self.session = session
        self._done_sent = False

    # -- plumbing -------------------------------------------------------------

    def _call(self, tool: str, args: dict):
        if self._done_sent:
            raise SdkError(f"{tool}: step already ended by done()")
        self._transport.send({
            "type": "tool_call",
            "step_id": self.step_id,
            "body": {"tool": tool, "args": args},
        })
        reply = self._transport.recv()
        rtype = reply.get("type")
        if rtype == "error":
            body = reply.get("body") or {}
            raise _tool_error(body.get("code", "Unknown"),
                              body.get("message", ""))
        if rtype not in ("tool_result", "action_ack"):
            raise UnexpectedMessage(
                f"expected a reply to {tool}, got {rtype!r}")
        return (reply.get("body") or {}).get("result")

    # -- observations ----------------------------------------------------------

    def markets(self) -> list:
        return self._call("get_markets", {})

    def orderbook(self, ticker: str, depth: Optional[int] = None) -> dict:
        args = {"ticker": ticker}
        if depth is not None:
            args["depth"] = depth
        return self._call("get_orderbook", args)

    def positions(self) -> dict:
        return self._call("get_positions", {})

    def orders(self) -> list:
        return self._call("get_orders", {})

    # -- actions ---------------------------------------------------------------

    def place_order(self, ticker: str, side: str, direction: str,
                    order_type: str, quantity: int, tif: str,
                    limit_price: Optional[int] = None) -> dict:
        return self._call("place_order", {
            "ticker": ticker,
            "side": side,
            "direction": direction,
            "order_type": order_type,
            "limit_price": limit_price,
            "quantity": quantity,
            "tif": tif,
        })

    def cancel_order(self, order_id: int) -> dict:
        return self._call("cancel_order", {"order_id": order_id})

    def done(self):
        if self._done_sent:
            return
        self._done_sent = True
        self._transport.send({"type": "done", "step_id": self.step_id})


def run_agent(step_handler: Callable[[StepContext], None], *,
              reader=None, writer=None,
              on_begin: Optional[Callable[[Session], None]] = None) -> Session:
    """Drive the child side of the protocol until the host says bye.

    Performs the hello handshake, then invokes step_handler once per
    step message; done is sent automatically if the handler returns
    without calling it. Returns the session after a clean shutdown.
    """
    transport = Transport(reader, writer)
    transport.send({"type": "hello", "protocol_version": PROTOCOL_VERSION})
    hello = transport.recv()
    if hello.get("type") != "hello":
        raise UnexpectedMessage(f"expected hello, got {hello.get('type')!r}")
    if hello.get("protocol_version") != PROTOCOL_VERSION:
        raise ProtocolMismatch(
            f"host protocol {hello.get('protocol_version')!r}, "
            f"SDK speaks {PROTOCOL_VERSION!r}")
    body = hello.get("body") or {}
    session = Session(
        episode_id=body.get("episode_id", ""),
        seed=int(body.get("seed", 0)),
        tickers=tuple(body.get("tickers", ())),
        bankroll_micro_usd=int(body.get("bankroll_micro_usd", 0)),
        engine=body.get("engine", ""),
    )
    if on_begin is not None:
        on_begin(session)

    while True:
        try:
            msg = transport.recv()
        except TransportClosed:
            return session
        mtype = msg.get("type")
        if mtype == "bye":
            return session
        if mtype != "step":
            raise UnexpectedMessage(f"expected step or bye, got {mtype!r}")
        ctx = StepContext(transport, msg.get("step_id", 0),
                          msg.get("body") or {}, session)
        step_handler(ctx)
        ctx.done()
