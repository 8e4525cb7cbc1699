"""Unit tests for the reported objectives."""

import numpy as np
import pytest
from vemse_common.schemas import EngineConfig
from vemse_core.errors import DimensionMismatchError, DomainError
from vemse_core.inference import (
    VariationalState,
    complex_gaussian_loglik,
    free_energy_surrogate,
    mcem_objective,
    posterior_sn,
    run_vem,
)
from vemse_core.nmf import NmfParams
from vemse_test_utils import ConstantSpeechModel, latent_free_mixture


def _state(x, speech_var, nmf, latent_dim=2):
    post = posterior_sn(x.data, speech_var, nmf.variance())
    N = x.n_frames
    return VariationalState(
        mu_s=post.mu_s,
        mu_n=post.mu_n,
        sigma_ss=post.sigma_ss,
        sigma_nn=post.sigma_nn,
        z_mean=np.zeros((latent_dim, N)),
        z_var=np.ones((latent_dim, N)),
        gamma2=speech_var,
    )


class TestFreeEnergy:
    """VEM free-energy surrogate."""

    def test_deterministic_and_finite(self, small_model, rng):
        """Same seed, same value; the value is finite."""
        x, _, noise_var = latent_free_mixture(0, frame_size=16, hop=4, n_frames=10)
        nmf = NmfParams(W=noise_var[:, :1], H=np.ones((1, 10)))
        state = _state(x, np.ones(noise_var.shape), nmf, latent_dim=3)
        a = free_energy_surrogate(x, state, nmf, small_model, D=4, seed=2)
        b = free_energy_surrogate(x, state, nmf, small_model, D=4, seed=2)
        assert a == b, "the surrogate must be deterministic given its seed"
        assert np.isfinite(a), "the surrogate must be finite"

    def test_equals_log_likelihood_at_exact_posterior(self):
        """With a latent-free model and the exact posterior the bound is tight."""
        x, psd, noise_var = latent_free_mixture(1)
        m = ConstantSpeechModel(psd)
        nmf = NmfParams(W=noise_var[:, :1], H=noise_var[:1, :] / noise_var[0, 0])
        speech_var = np.repeat(psd[:, None], x.n_frames, axis=1)
        state = _state(x, speech_var, nmf)
        loglik = float(np.sum(complex_gaussian_loglik(x.power, speech_var + nmf.variance())))
        assert free_energy_surrogate(x, state, nmf, m, D=1, seed=0) == pytest.approx(loglik, rel=1e-10)

    def test_non_decreasing_over_vem_iterations(self):
        """On a latent-free model VEM is exact EM, so the objective never decreases."""
        x, psd, _ = latent_free_mixture(2)
        result = run_vem(x, ConstantSpeechModel(psd), EngineConfig(K=2, max_iters=40, tol=1e-12))
        values = [r.free_energy for r in result.report.iterations]
        for i in range(1, len(values)):
            assert values[i] >= values[i - 1] - 1e-8 * abs(values[i - 1]), f"objective fell at iteration {i + 1}"

    def test_validation(self, small_model):
        """D must be positive and every grid must match."""
        x, _, noise_var = latent_free_mixture(0, frame_size=16, hop=4, n_frames=10)
        nmf = NmfParams(W=noise_var[:, :1], H=np.ones((1, 10)))
        state = _state(x, np.ones(noise_var.shape), nmf, latent_dim=3)
        with pytest.raises(DomainError):
            free_energy_surrogate(x, state, nmf, small_model, D=0, seed=0)
        with pytest.raises(DimensionMismatchError):
            free_energy_surrogate(x, state, NmfParams(np.ones((9, 1)), np.ones((1, 11))), small_model, D=1, seed=0)


class TestMcemObjective:
    """Sample-averaged marginal log-likelihood."""

    def test_average_over_samples(self):
        """The objective is the mean of the per-sample log-likelihoods."""
        x_power = np.array([[1.0, 2.0]])
        nmf = NmfParams(np.ones((1, 1)), np.ones((1, 2)))
        v1, v2 = np.full((1, 2), 1.0), np.full((1, 2), 3.0)
        single = [float(np.sum(complex_gaussian_loglik(x_power, v + 1.0))) for v in (v1, v2)]
        assert mcem_objective(x_power, [v1, v2], nmf) == pytest.approx(np.mean(single))

    def test_requires_samples(self):
        """An empty sample list is rejected."""
        with pytest.raises(DomainError):
            mcem_objective(np.ones((1, 1)), [], NmfParams(np.ones((1, 1)), np.ones((1, 1))))
