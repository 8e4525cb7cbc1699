"""
Command-scoped run configuration.

Values come from three layers: model defaults, an optional ``key = value``
config file, and command-line flags, in increasing order of precedence. The
merged mapping is validated by pydantic before any computation starts; unknown
keys are rejected.
"""

import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator
from vemse_common.schemas import MCEM_DEFAULT_R, EngineConfig, Method, MhConfig, ReconMode, StftConfig, TrainConfig


class ConfigFileError(ValueError):
    """A config file line that is not ``key = value``."""


def parse_config_file(path: str | Path) -> dict[str, Any]:
    """
    Read ``key = value`` lines; ``#`` starts a comment. Values are parsed as JSON
    when possible (numbers, booleans, lists) and kept as strings otherwise.
    """
    values: dict[str, Any] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ConfigFileError(f"cannot read config file {path}: {e}") from e

    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise ConfigFileError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in values:
            raise ConfigFileError(f"{path}:{lineno}: duplicate key {key!r}")
        value = value.strip()
        try:
            values[key] = json.loads(value)
        except json.JSONDecodeError:
            values[key] = value
    return values


def merge_layers(file_values: dict[str, Any], flag_values: dict[str, Any]) -> dict[str, Any]:
    """Flags that were given override file values; unset flags (None) do not."""
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return merged


class _RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = Field(default=0, ge=0)
    out: Path = Path("out")
    log_level: str = "INFO"


class _StftFields(_RunConfig):
    frame_size: int = 1024
    hop: int = 256

    @property
    def stft(self) -> StftConfig:
        return StftConfig(frame_size=self.frame_size, hop=self.hop)


class _EngineFields(_RunConfig):
    K: int = Field(default=10, ge=1)
    # None: 1 for VEM and the heuristic, MCEM_DEFAULT_R for MCEM
    D: int | None = Field(default=None, ge=1)
    max_iters: int = Field(default=200, ge=1)
    tol: float = Field(default=1e-4, gt=0.0)
    mh_iters: int = Field(default=100, ge=1)
    mh_keep: int = Field(default=25, ge=1)
    mh_eps2: float = Field(default=0.01, gt=0.0)
    track_mode: ReconMode = ReconMode.Z

    def engine(self, method: Method, seed: int, D: int | None = None) -> EngineConfig:
        return EngineConfig(
            method=method,
            K=self.K,
            D=self.D if D is None else D,
            max_iters=self.max_iters,
            tol=self.tol,
            seed=seed,
            mh=MhConfig(n_iters=self.mh_iters, keep_last=self.mh_keep, eps2=self.mh_eps2),
            track_mode=self.track_mode,
        )


class TrainRunConfig(_StftFields):
    """``train``: fit a toy VAE on synthetic utterances."""

    model: Path | None = None
    latent_dim: int = Field(default=8, ge=1)
    hidden: int = Field(default=128, ge=1)
    n_utterances: int = Field(default=50, ge=1)
    lr: float = 1e-3
    batch: int = 128
    patience: int = 10
    max_epochs: int = 500
    validation_fraction: float = 0.2

    @model_validator(mode="after")
    def _check(self) -> "TrainRunConfig":
        _ = self.stft, self.train_config
        return self

    @property
    def model_path(self) -> Path:
        return self.model if self.model is not None else self.out / "model.vaew"

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            batch=self.batch,
            patience=self.patience,
            max_epochs=self.max_epochs,
            seed=self.seed,
            validation_fraction=self.validation_fraction,
        )


class EnhanceRunConfig(_StftFields, _EngineFields):
    """``enhance``: one mixture, either a WAV file or a speech/noise pair mixed at ``snr``."""

    model: Path
    input: Path | None = None
    speech: Path | None = None
    noise: Path | None = None
    snr: float = 0.0
    method: Method = Method.VEM
    recon: ReconMode = ReconMode.MH

    @model_validator(mode="after")
    def _check(self) -> "EnhanceRunConfig":
        pair = self.speech is not None or self.noise is not None
        if self.input is not None and pair:
            raise ValueError("give either input or speech+noise, not both")
        if self.input is None and (self.speech is None or self.noise is None):
            raise ValueError("give input, or both speech and noise")
        if self.method is Method.MCEM and self.recon is not ReconMode.MH:
            raise ValueError("the mcem engine only supports recon=mh")
        _ = self.stft, self.engine_config
        return self

    @property
    def engine_config(self) -> EngineConfig:
        return self.engine(self.method, self.seed)


class BenchmarkRunConfig(_StftFields, _EngineFields):
    """``benchmark``: every method x sample count x reconstruction on seeded toy mixtures."""

    model: Path
    n_utterances: int = Field(default=20, ge=1)
    snr: float = 0.0
    d_values: list[int] = Field(default_factory=lambda: [1])
    r_values: list[int] = Field(default_factory=lambda: [MCEM_DEFAULT_R])
    methods: list[Method] = Field(default_factory=lambda: list(Method))
    modes: list[ReconMode] = Field(default_factory=lambda: list(ReconMode))
    track_sdr: bool = True
    # MH-Wiener for every engine
    track_mode: ReconMode = ReconMode.MH
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "BenchmarkRunConfig":
        if not self.d_values or any(d < 1 for d in self.d_values):
            raise ValueError("d_values must be a non-empty list of positive integers")
        if not self.r_values or any(r < 1 for r in self.r_values):
            raise ValueError("r_values must be a non-empty list of positive integers")
        if not self.methods or not self.modes:
            raise ValueError("methods and modes must not be empty")
        _ = self.stft, self.engine(Method.VEM, self.seed)
        return self

    def sample_counts(self, method: Method) -> list[int]:
        """D values for VEM and heuristic; R values for MCEM."""
        if method is Method.MCEM:
            return sorted(set(self.r_values))
        return sorted(set(self.d_values))

    def modes_for(self, method: Method) -> list[ReconMode]:
        if method is Method.MCEM:
            return [ReconMode.MH] if ReconMode.MH in self.modes else []
        return sorted(set(self.modes), key=lambda m: m.value)


class EvalRunConfig(_RunConfig):
    """``eval``: SI-SDR of an estimate against a reference."""

    reference: Path
    estimate: Path
