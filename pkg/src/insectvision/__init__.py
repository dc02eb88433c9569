"""Bio-inspired small target motion detection: STMD, LPTC and TSDN stages."""

from .core import (
    ConfigError,
    Detection,
    DirectionSet,
    ImageSequence,
    ModelConfig,
    ResponseVolume,
    StreamError,
    ValidationError,
    direction_set,
    format_config,
    load_config,
    parse_config,
)

__version__ = "0.1.0"
