"""Exception hierarchy shared across the engine."""


class PMBenchError(Exception):
    """Base class for all engine errors."""

    code = "PMBenchError"

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message


# --- episode store ---------------------------------------------------------

class MissingFile(PMBenchError):
    code = "MissingFile"


class MalformedRecord(PMBenchError):
    code = "MalformedRecord"

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class UnsortedEvents(PMBenchError):
    code = "UnsortedEvents"


class UnknownTicker(PMBenchError):
    code = "UnknownTicker"


class VersionMismatch(PMBenchError):
    code = "VersionMismatch"


class InvalidEpisode(PMBenchError):
    code = "InvalidEpisode"


class InvalidConfig(PMBenchError):
    code = "InvalidConfig"


# --- order book ------------------------------------------------------------

class CrossedSnapshot(PMBenchError):
    code = "CrossedSnapshot"


# --- execution / order gating ----------------------------------------------

class OrderRejected(PMBenchError):
    """Base for rejections surfaced to the agent as an order error."""

    code = "OrderRejected"


class InvalidSpec(OrderRejected):
    code = "InvalidSpec"


class WouldCross(OrderRejected):
    code = "WouldCross"


class UnsupportedTif(OrderRejected):
    code = "UnsupportedTif"


class MarketClosed(OrderRejected):
    code = "MarketClosed"


class InsufficientFunds(OrderRejected):
    code = "InsufficientFunds"


class InsufficientPosition(OrderRejected):
    code = "InsufficientPosition"


class UnknownOrder(OrderRejected):
    code = "UnknownOrder"


class AlreadyFilled(OrderRejected):
    code = "AlreadyFilled"


# --- agent context ----------------------------------------------------------

class BudgetExhausted(PMBenchError):
    code = "BudgetExhausted"


class NotInStep(PMBenchError):
    code = "NotInStep"


# --- bridge ------------------------------------------------------------------

class ProtocolError(PMBenchError):
    code = "ProtocolError"


class AgentCrashed(PMBenchError):
    code = "AgentCrashed"


class BridgeTimeout(PMBenchError):
    code = "BridgeTimeout"


# --- metrics / reporting -----------------------------------------------------

class EmptyCurve(PMBenchError):
    code = "EmptyCurve"


class MissingRun(PMBenchError):
    code = "MissingRun"
