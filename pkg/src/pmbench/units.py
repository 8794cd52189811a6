"""Integer money/price units.

Prices are integer cents on the 1..99 grid. Mid prices are integer
half-cents (a mid of 43.5c is stored as 87). Cash, fees and P&L are
integer micro-USD so every accounting step is exact.
"""

MICRO_PER_USD = 1_000_000
MICRO_PER_CENT = 10_000
MICRO_PER_HALF_CENT = 5_000

PRICE_MIN = 1
PRICE_MAX = 99


def div_round_half_up(n: int, d: int) -> int:
    """n/d for non-negative ints, exact halves rounded up."""
    if n < 0 or d <= 0:
        raise ValueError("div_round_half_up requires n >= 0, d > 0")
    return (2 * n + d) // (2 * d)


def div_ceil(n: int, d: int) -> int:
    return -(-n // d)


def valid_price(p) -> bool:
    return isinstance(p, int) and PRICE_MIN <= p <= PRICE_MAX
