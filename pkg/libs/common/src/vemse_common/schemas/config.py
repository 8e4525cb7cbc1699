"""
Configuration models for training, STFT analysis and the enhancement engines.

All models reject unknown keys and are immutable once validated.
"""

from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Method(str, Enum):
    """Enhancement engine."""

    VEM = "vem"
    MCEM = "mcem"
    HEURISTIC = "heuristic"


class ReconMode(str, Enum):
    """Speech reconstruction: MH-Wiener, S-Wiener or Z-Wiener."""

    MH = "mh"
    S = "s"
    Z = "z"


# Retained samples per MCEM iteration when none are given.
MCEM_DEFAULT_R = 5


class _Frozen(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class StftConfig(_Frozen):
    """Sine-window STFT geometry."""

    frame_size: int = Field(default=1024, gt=0)
    hop: int = Field(default=256, gt=0)

    @model_validator(mode="after")
    def _check_geometry(self) -> "StftConfig":
        if self.frame_size % 2:
            raise ValueError(f"frame_size must be even, got {self.frame_size}")
        if self.hop > self.frame_size:
            raise ValueError(f"hop ({self.hop}) exceeds frame_size ({self.frame_size})")
        if self.frame_size % self.hop:
            raise ValueError(f"hop ({self.hop}) must divide frame_size ({self.frame_size})")
        return self

    @property
    def n_freqs(self) -> int:
        return self.frame_size // 2 + 1


class MhConfig(_Frozen):
    """Random-walk Metropolis-Hastings settings used for MH-Wiener reconstruction."""

    n_iters: int = Field(default=100, ge=1)
    keep_last: int = Field(default=25, ge=1)
    eps2: float = Field(default=0.01, gt=0.0)

    @model_validator(mode="after")
    def _check_keep(self) -> "MhConfig":
        if self.keep_last > self.n_iters:
            raise ValueError(
                f"keep_last ({self.keep_last}) must not exceed n_iters ({self.n_iters})"
            )
        return self


class EngineConfig(_Frozen):
    """
    Settings shared by the VEM, heuristic and MCEM engines.

    ``D`` is the number of latent draws used for the E-(s,n) step; for MCEM it is
    the number of retained samples R, of 4R drawn per iteration. Left unset it
    defaults to 1, or to ``MCEM_DEFAULT_R`` for MCEM.
    """

    method: Method = Method.VEM
    K: int = Field(default=10, ge=1)
    D: int = Field(default=1, ge=1)
    max_iters: int = Field(default=200, ge=1)
    tol: float = Field(default=1e-4, gt=0.0)
    seed: int = Field(default=0, ge=0)
    mh: MhConfig = Field(default_factory=MhConfig)
    track_mode: ReconMode = ReconMode.Z

    @model_validator(mode="before")
    @classmethod
    def _default_sample_count(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("D") is None:
            method = Method(data.get("method", Method.VEM))
            data = {**data, "D": MCEM_DEFAULT_R if method is Method.MCEM else 1}
        return data

    @property
    def mcem_draws(self) -> int:
        return 4 * self.D


class TrainConfig(_Frozen):
    """Adam training of the VAE on power-spectrogram frames."""

    lr: float = Field(default=1e-3, gt=0.0)
    batch: int = Field(default=128, ge=1)
    patience: int = Field(default=10, ge=0)
    max_epochs: int = Field(default=500, ge=1)
    seed: int = Field(default=0, ge=0)
    validation_fraction: float = Field(default=0.2, ge=0.0, lt=1.0)
