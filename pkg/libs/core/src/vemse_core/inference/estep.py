"""
Variational E-steps.

E-(s,n): given the expected speech precision 1/gamma^2 and the NMF noise
variance, r(s_ft, n_ft) is Gaussian with a rank-1 covariance; the speech mean is
the Wiener estimate. E-z: r(z_t) is the encoder's output for the expected
speech power |mu_s|^2 + Sigma_ss.
"""

from collections.abc import Sequence

import numpy as np
from vemse_common.utils.seeding import as_generator

from vemse_core.errors import DimensionMismatchError, DomainError
from vemse_core.inference.state import SourcePosterior, SpeechModel
from vemse_core.vae.model import EncoderOutput


def posterior_sn(x: np.ndarray, gamma2: np.ndarray, sigma_n2: np.ndarray) -> SourcePosterior:
    """r(s, n) for each bin of the mixture ``x`` (any shape, broadcast elementwise)."""
    gamma2 = np.asarray(gamma2, dtype=np.float64)
    sigma_n2 = np.asarray(sigma_n2, dtype=np.float64)
    if np.any(gamma2 <= 0) or np.any(sigma_n2 <= 0):
        raise DomainError("speech and noise variances must be strictly positive")
    x = np.asarray(x)
    total = gamma2 + sigma_n2
    scale = gamma2 * sigma_n2 / total
    return SourcePosterior(
        mu_s=x * (gamma2 / total),
        mu_n=x * (sigma_n2 / total),
        sigma_ss=scale,
        sigma_nn=scale.copy(),
    )


def harmonic_mean_variance(variances: Sequence[np.ndarray]) -> np.ndarray:
    """gamma^2 with 1/gamma^2 = mean_d 1/sigma_d^2."""
    if not variances:
        raise DomainError("at least one variance sample is required")
    inverse = np.zeros_like(np.asarray(variances[0], dtype=np.float64))
    for v in variances:
        inverse += 1.0 / np.asarray(v, dtype=np.float64)
    return len(variances) / inverse


def precision_gamma(
    m: SpeechModel,
    z_mean: np.ndarray,
    z_var: np.ndarray,
    D: int,
    seed: int | np.random.Generator,
) -> np.ndarray:
    """Monte Carlo estimate of gamma^2 from ``D`` reparametrized draws of r(z)."""
    if D < 1:
        raise DomainError(f"D must be at least 1, got {D}")
    if z_mean.shape != z_var.shape:
        raise DimensionMismatchError(f"z_mean {z_mean.shape} and z_var {z_var.shape} differ")
    rng = as_generator(seed)
    std = np.sqrt(z_var)
    draws = [m.decode(z_mean + std * rng.standard_normal(z_mean.shape)) for _ in range(D)]
    return harmonic_mean_variance(draws)


def posterior_z(m: SpeechModel, mu_s: np.ndarray, sigma_ss: np.ndarray) -> EncoderOutput:
    """r(z) = q_phi(z | |mu_s|^2 + Sigma_ss)."""
    if mu_s.shape != sigma_ss.shape:
        raise DimensionMismatchError(f"mu_s {mu_s.shape} and sigma_ss {sigma_ss.shape} differ")
    if np.any(sigma_ss < 0):
        raise DomainError("sigma_ss must be nonnegative")
    return m.encode(np.abs(mu_s) ** 2 + sigma_ss)


def posterior_z_heuristic(m: SpeechModel, mu_s: np.ndarray) -> EncoderOutput:
    """Heuristic baseline: the posterior covariance term is dropped from the encoder input."""
    return m.encode(np.abs(mu_s) ** 2)
