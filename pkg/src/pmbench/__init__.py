"""pmbench: deterministic event-driven replay backtesting for binary
YES/NO prediction-market contracts."""

__version__ = "0.1.0"

from .episodes import (  # noqa: F401
    Episode,
    EpisodeMetadata,
    SynthConfig,
    generate_synthetic,
    load_episode,
    write_episode,
)
from .execution import (  # noqa: F401
    Direction,
    FeeModel,
    Fill,
    Liquidity,
    OrderSpec,
    OrderType,
    Side,
    Tif,
    fee,
)
from .metrics import aggregate, compute_metrics  # noqa: F401
from .simulator import EpisodeResult, SimConfig, run_episode  # noqa: F401
