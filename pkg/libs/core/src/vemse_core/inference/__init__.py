"""Enhancement engines, the latent sampler and speech reconstruction."""

from vemse_core.inference.engines import enhance, run_heuristic, run_mcem, run_vem
from vemse_core.inference.estep import (
    harmonic_mean_variance,
    posterior_sn,
    posterior_z,
    posterior_z_heuristic,
    precision_gamma,
)
from vemse_core.inference.free_energy import free_energy_surrogate, mcem_objective
from vemse_core.inference.reconstruction import reconstruct, wiener_gain
from vemse_core.inference.sampler import (
    ChainResult,
    acceptance_probability,
    complex_gaussian_loglik,
    latent_log_posterior,
    mh_step,
    run_chain,
)
from vemse_core.inference.state import (
    EnhanceReport,
    EnhanceResult,
    IterationRecord,
    LatentSamples,
    SourcePosterior,
    SpeechModel,
    VariationalState,
)

__all__ = [
    "ChainResult",
    "EnhanceReport",
    "EnhanceResult",
    "IterationRecord",
    "LatentSamples",
    "SourcePosterior",
    "SpeechModel",
    "VariationalState",
    "acceptance_probability",
    "complex_gaussian_loglik",
    "enhance",
    "free_energy_surrogate",
    "harmonic_mean_variance",
    "latent_log_posterior",
    "mcem_objective",
    "mh_step",
    "posterior_sn",
    "posterior_z",
    "posterior_z_heuristic",
    "precision_gamma",
    "reconstruct",
    "run_chain",
    "run_heuristic",
    "run_mcem",
    "run_vem",
    "wiener_gain",
]
