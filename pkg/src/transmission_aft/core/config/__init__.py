from .config import (
    DESIGN_NAMES,
    FAMILY_NAMES,
    WIW_MODES,
    Config,
    FittingConfig,
    ModelConfig,
    NaturalHistoryConfig,
    OutputConfig,
    SimulationConfig,
    StudyConfig,
)

__all__ = [
    "Config",
    "SimulationConfig",
    "StudyConfig",
    "NaturalHistoryConfig",
    "ModelConfig",
    "FittingConfig",
    "OutputConfig",
    "DESIGN_NAMES",
    "FAMILY_NAMES",
    "WIW_MODES",
]
