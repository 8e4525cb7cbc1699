from vemse_common.schemas.config import (
    MCEM_DEFAULT_R,
    EngineConfig,
    Method,
    MhConfig,
    ReconMode,
    StftConfig,
    TrainConfig,
)

__all__ = [
    "MCEM_DEFAULT_R",
    "EngineConfig",
    "Method",
    "MhConfig",
    "ReconMode",
    "StftConfig",
    "TrainConfig",
]
