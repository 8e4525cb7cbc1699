"""
Random-walk Metropolis-Hastings over the latent codes, one independent chain per frame.

Proposals are z' ~ N(z, eps2 I). A proposal is accepted when u < alpha with
alpha = min(1, p(z') / p(z)) evaluated per frame. Each frame draws its proposal
noise and uniforms from its own substream of the seed, so results do not depend
on how frames are batched or parallelized.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from vemse_common.utils.seeding import frame_rngs

from vemse_core.errors import DimensionMismatchError, DomainError
from vemse_core.inference.state import SpeechModel
from vemse_core.vae.model import LatentBatch

LogDensity = Callable[[np.ndarray], np.ndarray]


def complex_gaussian_loglik(power: np.ndarray, variance: np.ndarray) -> np.ndarray:
    """log N_c(x; 0, variance) per bin, given |x|^2."""
    return -np.log(np.pi * variance) - power / variance


def latent_log_posterior(m: SpeechModel, x_power: np.ndarray, noise_var: np.ndarray) -> LogDensity:
    """Unnormalized log p(z_t | x_t) = log p(x_t | z_t) + log p(z_t), one value per frame."""
    if x_power.shape != noise_var.shape:
        raise DimensionMismatchError(f"mixture {x_power.shape} and noise variance {noise_var.shape} differ")

    def target(z: np.ndarray) -> np.ndarray:
        variance = m.decode(z) + noise_var
        return np.sum(complex_gaussian_loglik(x_power, variance), axis=0) - 0.5 * np.sum(z**2, axis=0)

    return target


def acceptance_probability(logp_new: np.ndarray, logp_old: np.ndarray) -> np.ndarray:
    return np.exp(np.minimum(np.asarray(logp_new) - np.asarray(logp_old), 0.0))


def chain_noise(
    seed: int, n_steps: int, latent_dim: int, n_frames: int, keys: Sequence[int] = ()
) -> tuple[np.ndarray, np.ndarray]:
    """Standard-normal proposal noise (n_steps, L, N) and uniforms (n_steps, N) from per-frame substreams."""
    normals = np.empty((n_steps, latent_dim, n_frames))
    uniforms = np.empty((n_steps, n_frames))
    for t, rng in enumerate(frame_rngs(seed, n_frames, *keys)):
        normals[:, :, t] = rng.standard_normal((n_steps, latent_dim))
        uniforms[:, t] = rng.random(n_steps)
    return normals, uniforms


def _transition(
    z: np.ndarray,
    logp: np.ndarray,
    target: LogDensity,
    eps2: float,
    normal: np.ndarray,
    uniform: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    proposal = z + np.sqrt(eps2) * normal
    logp_new = target(proposal)
    accept = uniform < acceptance_probability(logp_new, logp)
    return (
        np.where(accept[None, :], proposal, z),
        np.where(accept, logp_new, logp),
        accept,
    )


def mh_step(
    z_prev: LatentBatch | np.ndarray,
    target_logdensity: LogDensity,
    eps2: float,
    seed: int,
    keys: Sequence[int] = (),
) -> LatentBatch:
    """One Metropolis-Hastings transition for every frame."""
    if eps2 <= 0:
        raise DomainError(f"eps2 must be positive, got {eps2}")
    z = z_prev.z if isinstance(z_prev, LatentBatch) else np.asarray(z_prev, dtype=np.float64)
    normals, uniforms = chain_noise(seed, 1, z.shape[0], z.shape[1], keys)
    z_new, _, _ = _transition(z, target_logdensity(z), target_logdensity, eps2, normals[0], uniforms[0])
    return LatentBatch(z_new)


@dataclass(frozen=True)
class ChainResult:
    samples: np.ndarray
    acceptance_rate: np.ndarray
    last: np.ndarray
    last_logp: np.ndarray


def run_chain(
    z0: np.ndarray,
    target: LogDensity,
    eps2: float,
    n_steps: int,
    keep_last: int,
    seed: int,
    keys: Sequence[int] = (),
) -> ChainResult:
    """Run ``n_steps`` transitions from ``z0`` and keep the last ``keep_last`` states."""
    if eps2 <= 0:
        raise DomainError(f"eps2 must be positive, got {eps2}")
    if not 1 <= keep_last <= n_steps:
        raise DomainError(f"keep_last must be in [1, {n_steps}], got {keep_last}")
    z = np.asarray(z0, dtype=np.float64)
    if z.ndim != 2:
        raise DimensionMismatchError(f"chain start must be L x N, got {z.shape}")

    normals, uniforms = chain_noise(seed, n_steps, z.shape[0], z.shape[1], keys)
    logp = target(z)
    kept = np.empty((keep_last, *z.shape))
    accepted = np.zeros(z.shape[1])
    first_kept = n_steps - keep_last
    for step in range(n_steps):
        z, logp, accept = _transition(z, logp, target, eps2, normals[step], uniforms[step])
        accepted += accept
        if step >= first_kept:
            kept[step - first_kept] = z

    return ChainResult(samples=kept, acceptance_rate=accepted / n_steps, last=z, last_logp=logp)
