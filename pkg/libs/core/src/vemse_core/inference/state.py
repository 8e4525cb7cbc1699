"""Types shared by the enhancement engines."""

from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np
from vemse_common.schemas import Method

from vemse_core.nmf import NmfParams
from vemse_core.vae.model import EncoderOutput


class SpeechModel(Protocol):
    """What the engines need from a generative speech model."""

    @property
    def n_freqs(self) -> int: ...

    @property
    def latent_dim(self) -> int: ...

    def encode(self, power_spec: np.ndarray) -> EncoderOutput: ...

    def decode(self, z: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class SourcePosterior:
    """Per-bin r(s, n): complex means and the (equal) diagonal of the rank-1 covariance."""

    mu_s: np.ndarray
    mu_n: np.ndarray
    sigma_ss: np.ndarray
    sigma_nn: np.ndarray

    @property
    def speech_power(self) -> np.ndarray:
        """E_r[|s|^2] = |mu_s|^2 + sigma_ss."""
        return np.abs(self.mu_s) ** 2 + self.sigma_ss

    @property
    def noise_power(self) -> np.ndarray:
        return np.abs(self.mu_n) ** 2 + self.sigma_nn


@dataclass(frozen=True)
class VariationalState:
    mu_s: np.ndarray
    mu_n: np.ndarray
    sigma_ss: np.ndarray
    sigma_nn: np.ndarray
    z_mean: np.ndarray
    z_var: np.ndarray
    gamma2: np.ndarray

    @classmethod
    def from_parts(cls, post: SourcePosterior, r_z: EncoderOutput, gamma2: np.ndarray) -> "VariationalState":
        return cls(
            mu_s=post.mu_s,
            mu_n=post.mu_n,
            sigma_ss=post.sigma_ss,
            sigma_nn=post.sigma_nn,
            z_mean=r_z.mean,
            z_var=r_z.variance,
            gamma2=gamma2,
        )

    @property
    def speech_power(self) -> np.ndarray:
        return np.abs(self.mu_s) ** 2 + self.sigma_ss


@dataclass(frozen=True)
class LatentSamples:
    """Retained MH samples of the MCEM E-step, shape (R, L, N)."""

    samples: np.ndarray
    mu_s: np.ndarray

    @property
    def last(self) -> np.ndarray:
        return self.samples[-1]

    @property
    def count(self) -> int:
        return int(self.samples.shape[0])


@dataclass(frozen=True)
class IterationRecord:
    """
    One engine iteration.

    ``free_energy`` is the variational free-energy surrogate for VEM/heuristic and
    the Monte Carlo complete-data log-likelihood for MCEM.
    """

    iteration: int
    free_energy: float
    elapsed_ms: float
    rel_change: float | None = None
    si_sdr_db: float | None = None


@dataclass
class EnhanceReport:
    method: Method
    config: dict[str, Any]
    iterations: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    final_si_sdr_db: float | None = None

    @property
    def iterations_used(self) -> int:
        return len(self.iterations)

    @property
    def sdr_trace(self) -> list[float] | None:
        trace = [r.si_sdr_db for r in self.iterations]
        if not trace or any(v is None for v in trace):
            return None
        return [float(v) for v in trace if v is not None]

    def to_records(self) -> Iterator[dict[str, Any]]:
        for r in self.iterations:
            yield {
                "type": "iteration",
                "iteration": r.iteration,
                "free_energy": r.free_energy,
                "elapsed_ms": r.elapsed_ms,
                "rel_change": r.rel_change,
                "si_sdr_db": r.si_sdr_db,
            }
        yield {
            "type": "summary",
            "method": self.method,
            "iterations_used": self.iterations_used,
            "converged": self.converged,
            "final_si_sdr_db": self.final_si_sdr_db,
            "config": self.config,
        }


@dataclass
class EnhanceResult:
    """Output of an engine run: the final posterior, the noise model and the report."""

    method: Method
    nmf: NmfParams
    report: EnhanceReport
    state: VariationalState | None = None
    samples: LatentSamples | None = None

    @property
    def posterior(self) -> VariationalState | LatentSamples:
        if self.state is not None:
            return self.state
        if self.samples is not None:
            return self.samples
        raise RuntimeError("engine result carries neither a variational state nor samples")
