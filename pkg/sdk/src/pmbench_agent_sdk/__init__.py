"""Client SDK for pmbench bridge agents (protocol version 1)."""

from .session import (
    PROTOCOL_VERSION,
    BudgetExhaustedError,
    ProtocolMismatch,
    SdkError,
    Session,
    StepContext,
    ToolError,
    Transport,
    TransportClosed,
    UnexpectedMessage,
    run_agent,
)

__version__ = "0.1.0"

__all__ = [
    "PROTOCOL_VERSION",
    "BudgetExhaustedError",
    "ProtocolMismatch",
    "SdkError",
    "Session",
    "StepContext",
    "ToolError",
    "Transport",
    "TransportClosed",
    "UnexpectedMessage",
    "run_agent",
    "__version__",
]
