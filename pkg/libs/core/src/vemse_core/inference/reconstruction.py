"""
Speech estimates from a converged posterior.

* ``s``  (S-Wiener): the variational mean mu_s.
* ``z``  (Z-Wiener): the Wiener gain averaged over draws of r(z), applied to x.
* ``mh`` (MH-Wiener): the Wiener gain averaged over Metropolis-Hastings samples of
  p(z | x) under the estimated noise model.
"""

import logging

import numpy as np
from vemse_common.schemas import EngineConfig, ReconMode
from vemse_common.utils.seeding import MH_CHAIN, RECONSTRUCTION, make_rng

from vemse_core.dsp import ComplexSpectrogram
from vemse_core.errors import DimensionMismatchError, InvalidModeError
from vemse_core.inference.sampler import latent_log_posterior, run_chain
from vemse_core.inference.state import LatentSamples, SpeechModel, VariationalState
from vemse_core.nmf import NmfParams

logger = logging.getLogger(__name__)


def wiener_gain(speech_var: np.ndarray, noise_var: np.ndarray) -> np.ndarray:
    """sigma^2 / (sigma^2 + WH), elementwise."""
    return speech_var / (speech_var + noise_var)


def mean_gain(m: SpeechModel, z_samples: np.ndarray, noise_var: np.ndarray) -> np.ndarray:
    """Wiener gain averaged over a stack of latent samples of shape (R, L, N)."""
    gain = np.zeros_like(noise_var)
    for z in z_samples:
        gain += wiener_gain(m.decode(z), noise_var)
    return gain / len(z_samples)


def mh_samples(
    x_power: np.ndarray,
    z0: np.ndarray,
    nmf: NmfParams,
    m: SpeechModel,
    cfg: EngineConfig,
    seed: int,
) -> np.ndarray:
    """Samples of p(z | x; W, H) from a chain started at ``z0`` using ``cfg.mh``."""
    target = latent_log_posterior(m, x_power, nmf.variance())
    chain = run_chain(
        z0,
        target,
        eps2=cfg.mh.eps2,
        n_steps=cfg.mh.n_iters,
        keep_last=cfg.mh.keep_last,
        seed=seed,
        keys=(RECONSTRUCTION, MH_CHAIN),
    )
    logger.debug("MH-Wiener chain: mean acceptance %.3f", float(np.mean(chain.acceptance_rate)))
    return chain.samples


def reconstruct(
    x: ComplexSpectrogram,
    posterior: VariationalState | LatentSamples,
    nmf: NmfParams,
    m: SpeechModel,
    mode: ReconMode | str,
    cfg: EngineConfig,
    seed: int | None = None,
) -> ComplexSpectrogram:
    """
    Speech spectrogram estimate in the requested ``mode``.

    Sample-based posteriors (MCEM) only support ``mh``; that chain starts from the
    last retained E-step sample instead of the mean of r(z).
    """
    try:
        mode = ReconMode(mode)
    except ValueError as e:
        raise InvalidModeError(f"unknown reconstruction mode {mode!r}") from e
    if nmf.shape != x.data.shape:
        raise DimensionMismatchError(f"NMF model {nmf.shape} does not match mixture {x.data.shape}")
    seed = cfg.seed if seed is None else seed
    noise_var = nmf.variance()

    if isinstance(posterior, LatentSamples):
        if mode is not ReconMode.MH:
            raise InvalidModeError(f"mode {mode.value!r} needs a variational posterior; MCEM supports 'mh' only")
        samples = mh_samples(x.power, posterior.last, nmf, m, cfg, seed)
        return x.with_data(mean_gain(m, samples, noise_var) * x.data)

    if mode is ReconMode.S:
        return x.with_data(posterior.mu_s.copy())
    if mode is ReconMode.Z:
        rng = make_rng(seed, RECONSTRUCTION)
        std = np.sqrt(posterior.z_var)
        draws = np.stack(
            [posterior.z_mean + std * rng.standard_normal(posterior.z_mean.shape) for _ in range(cfg.D)]
        )
        return x.with_data(mean_gain(m, draws, noise_var) * x.data)

    samples = mh_samples(x.power, posterior.z_mean, nmf, m, cfg, seed)
    return x.with_data(mean_gain(m, samples, noise_var) * x.data)
