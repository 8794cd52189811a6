"""Out-of-process replica of the engine's built-in random baseline.

Reproduces the same seeded decision stream from the step summary alone,
so running it through the bridge yields a trade log byte-identical to
the in-process agent. The draw order per step is part of the baseline's
documented behavior:

  1. uniform gate against trade_prob
  2. market index among quoted open markets
  3. side (YES/NO), then direction (BUY/SELL)
  4. quantity

Orders are MARKET IOC; a per-ticker net position cap is respected and
rejections are swallowed, exactly like the in-process baseline.
"""

import random

from pmbench_agent_sdk import ToolError, run_agent

TRADE_PROB = 0.1
MIN_QTY = 1
MAX_QTY = 3
POSITION_CAP = 10

rng = None


def begin(session):
    global rng
    rng = random.Random(f"{session.seed}:{session.episode_id}")


def step(ctx):
    if rng.random() >= TRADE_PROB:
        return
    quoted = [m for m in ctx.summary["markets"]
              if m["status"] == "open"
              and m["yes_bid"] is not None and m["yes_ask"] is not None]
    if not quoted:
        return
    market = quoted[rng.randrange(len(quoted))]
    side = "YES" if rng.randrange(2) == 0 else "NO"
    direction = "BUY" if rng.randrange(2) == 0 else "SELL"
    qty = rng.randint(MIN_QTY, MAX_QTY)

    net = 0
    for p in ctx.summary["positions"]:
        if p["ticker"] == market["ticker"]:
            net = p["yes_qty"] - p["no_qty"]
    delta = qty if side == "YES" else -qty
    if direction == "SELL":
        delta = -delta
    if abs(net + delta) > POSITION_CAP:
        return
    try:
        ctx.place_order(ticker=market["ticker"], side=side,
                        direction=direction, order_type="MARKET",
                        quantity=qty, tif="IOC")
    except ToolError:
        pass  # rejections are part of the baseline's behavior


if __name__ == "__main__":
    run_agent(step, on_begin=begin)
