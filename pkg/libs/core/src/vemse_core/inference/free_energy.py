"""
Objective values reported per iteration.

The VEM engines report a Monte Carlo estimate of the variational free energy
E_r[log p(x, s, n, z) - log r(s, n, z)]. Because x = s + n, r(s, n) is a
degenerate Gaussian whose only free direction is s; its entropy is that of a
proper complex Gaussian with variance Sigma_ss. MCEM reports the sample average
of the complete-data log-likelihood log p(x | z; W, H).
"""

import numpy as np
from vemse_common.utils.seeding import FREE_ENERGY, make_rng

from vemse_core.dsp import ComplexSpectrogram
from vemse_core.errors import DimensionMismatchError, DomainError
from vemse_core.inference.sampler import complex_gaussian_loglik
from vemse_core.inference.state import SpeechModel, VariationalState
from vemse_core.nmf import NmfParams

_LOG_PI = float(np.log(np.pi))
_LOG_2PI = float(np.log(2.0 * np.pi))


def free_energy_surrogate(
    x: ComplexSpectrogram,
    state: VariationalState,
    nmf: NmfParams,
    m: SpeechModel,
    D: int,
    seed: int,
) -> float:
    """Free-energy estimate using ``D`` draws of r(z); deterministic given ``seed``."""
    if D < 1:
        raise DomainError(f"D must be at least 1, got {D}")
    if state.mu_s.shape != x.data.shape or nmf.shape != x.data.shape:
        raise DimensionMismatchError("state, NMF model and mixture must share the F x N grid")

    rng = make_rng(seed, FREE_ENERGY)
    std = np.sqrt(state.z_var)
    log_var = np.zeros(x.data.shape)
    inv_var = np.zeros(x.data.shape)
    for _ in range(D):
        sigma2 = m.decode(state.z_mean + std * rng.standard_normal(state.z_mean.shape))
        log_var += np.log(sigma2)
        inv_var += 1.0 / sigma2
    log_var /= D
    inv_var /= D

    c = state.sigma_ss
    noise_var = nmf.variance()
    speech_term = -_LOG_PI - log_var - (np.abs(state.mu_s) ** 2 + c) * inv_var
    noise_term = -_LOG_PI - np.log(noise_var) - (np.abs(state.mu_n) ** 2 + state.sigma_nn) / noise_var
    source_entropy = np.log(np.pi * np.e * c)

    z_prior = -0.5 * _LOG_2PI - 0.5 * (state.z_mean**2 + state.z_var)
    z_entropy = 0.5 * np.log(2.0 * np.pi * np.e * state.z_var)

    return float(
        np.sum(speech_term + noise_term + source_entropy) + np.sum(z_prior + z_entropy)
    )


def mcem_objective(x_power: np.ndarray, speech_vars: list[np.ndarray], nmf: NmfParams) -> float:
    """mean_d sum_ft log N_c(x_ft; 0, sigma_f^2(z_d) + (WH)_ft)."""
    if not speech_vars:
        raise DomainError("at least one latent sample is required")
    noise_var = nmf.variance()
    total = sum(float(np.sum(complex_gaussian_loglik(x_power, v + noise_var))) for v in speech_vars)
    return total / len(speech_vars)
