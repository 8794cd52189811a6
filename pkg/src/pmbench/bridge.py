"""Host side of the external-agent stdio bridge.

Runs an agent as a child process speaking line-delimited JSON (one object
per line) over its stdin/stdout, per PROTOCOL.md version "1". The bridge
relays tool calls to the AgentContext, enforces the per-step budget via
the context, and serializes all messages, so a bridged strategy produces
the same trade log as the same strategy linked in-process.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from typing import Optional, Union

from .agent_api import AgentContext, spec_from_args
from .errors import (
    AgentCrashed,
    BridgeTimeout,
    PMBenchError,
    ProtocolError,
)

PROTOCOL_VERSION = "1"

READ_TOOLS = ("get_markets", "get_orderbook", "get_positions", "get_orders")
ACTION_TOOLS = ("place_order", "cancel_order")


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


class BridgeAgent:
    """Simulator-facing agent that proxies steps to a child process."""

    def __init__(self, cmd: Union[str, list], timeout_s: float = 60.0):
        self.cmd = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        self.timeout_s = timeout_s
        self.proc: Optional[subprocess.Popen] = None
        self._lines: queue.Queue = queue.Queue()
        self._reader: Optional[threading.Thread] = None
        self.timed_out = False  # marks the run non-reproducible

    # -- transport ----------------------------------------------------------------

    def _pump(self, stream):
        for line in stream:
            self._lines.put(line)
        self._lines.put(None)  # EOF sentinel

    def _send(self, msg: dict):
        if self.proc is None or self.proc.stdin is None:
            raise AgentCrashed("bridge child is not running")
        try:
            self.proc.stdin.write(_dump(msg) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise AgentCrashed(f"write to bridge child failed: {exc}")

    def _recv(self) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout_s)
        except queue.Empty:
            self.timed_out = True
            raise BridgeTimeout(
                f"no message from agent within {self.timeout_s}s; "
                "run is not reproducible")
        if line is None:
            raise AgentCrashed("bridge child closed its stdout")
        line = line.strip()
        if not line:
            return self._recv()
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed message line: {exc}")
        if not isinstance(msg, dict) or "type" not in msg:
            raise ProtocolError("message must be an object with a 'type'")
        return msg

    # -- agent interface -----------------------------------------------------------

    def begin(self, metadata, seed_base: int):
        self.proc = subprocess.Popen(
            self.cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1)
        self._reader = threading.Thread(
            target=self._pump, args=(self.proc.stdout,), daemon=True)
        self._reader.start()
        hello = self._recv()
        if hello.get("type") != "hello":
            raise ProtocolError(f"expected hello, got {hello.get('type')!r}")
        if hello.get("protocol_version") != PROTOCOL_VERSION:
            raise ProtocolError(
                f"protocol version {hello.get('protocol_version')!r} != "
                f"{PROTOCOL_VERSION!r}")
        self._send({
            "type": "hello",
            "protocol_version": PROTOCOL_VERSION,
            "body": {
                "engine": "pmbench",
                "episode_id": metadata.episode_id,
                "seed": seed_base,
                "tickers": list(metadata.tickers),
                "bankroll_micro_usd": metadata.bankroll,
            },
        })

    def step(self, ctx: AgentContext):
        step_id = ctx.step_index
        self._send({
            "type": "step",
            "step_id": step_id,
            "protocol_version": PROTOCOL_VERSION,
            "body": ctx.summary(),
        })
        while True:
            try:
                msg = self._recv()
            except ProtocolError:
                # malformed line: step aborted, agent counted as done
                return
            mtype = msg.get("type")
            if mtype == "done":
                return
            if mtype != "tool_call":
                raise ProtocolError(f"unexpected message type {mtype!r}")
            body = msg.get("body") or {}
            tool = body.get("tool")
            args = body.get("args") or {}
            try:
                result = self._dispatch(ctx, tool, args)
            except PMBenchError as exc:
                self._send({
                    "type": "error", "step_id": step_id,
                    "body": {"code": exc.code, "message": exc.message},
                })
                continue
            reply_type = "action_ack" if tool in ACTION_TOOLS else "tool_result"
            self._send({
                "type": reply_type, "step_id": step_id,
                "body": {"tool": tool, "result": result},
            })

    def _dispatch(self, ctx: AgentContext, tool: str, args: dict):
        if tool == "get_markets":
            return ctx.get_markets()
        if tool == "get_orderbook":
            return ctx.get_orderbook(args["ticker"], args.get("depth"))
        if tool == "get_positions":
            return ctx.get_positions()
        if tool == "get_orders":
            return ctx.get_orders()
        if tool == "place_order":
            try:
                spec = spec_from_args(args)
            except (KeyError, ValueError) as exc:
                raise ProtocolError(f"bad place_order args: {exc}")
            return ctx.place_order(spec)
        if tool == "cancel_order":
            return ctx.cancel_order(int(args["order_id"]))
        raise ProtocolError(f"unknown tool {tool!r}")

    def finish(self):
        if self.proc is None:
            return
        try:
            self._send({"type": "bye"})
        except (AgentCrashed, PMBenchError):
            pass
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()
        if self.proc.stdin:
            self.proc.stdin.close()
        self.proc = None


def host_agent(cmd: Union[str, list], timeout_s: float = 60.0) -> BridgeAgent:
    """Build a bridge agent for an external program spec."""
    return BridgeAgent(cmd, timeout_s=timeout_s)
