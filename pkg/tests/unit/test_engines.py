"""Unit tests for the VEM, heuristic and MCEM engines."""

import numpy as np
import pytest
from vemse_common.schemas import EngineConfig, Method, MhConfig, ReconMode
from vemse_core.dsp import Waveform, istft, stft
from vemse_core.errors import DimensionMismatchError, InferenceDivergedError
from vemse_core.inference import enhance, reconstruct, run_heuristic, run_mcem, run_vem, wiener_gain
from vemse_core.metrics import si_sdr
from vemse_test_utils import ConstantSpeechModel, latent_free_mixture, random_waveform


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


@pytest.fixture
def mixture():
    return latent_free_mixture(11)


class TestVem:
    """Variational EM."""

    def test_means_add_up_to_mixture(self, mixture):
        """mu_s + mu_n = x in every bin."""
        x, psd, _ = mixture
        result = run_vem(x, ConstantSpeechModel(psd), EngineConfig(K=2, max_iters=5))
        np.testing.assert_allclose(result.state.mu_s + result.state.mu_n, x.data, atol=1e-12)

    def test_latent_free_estimate_is_wiener(self, mixture):
        """With a latent-free model the speech mean is the Wiener estimate under the fitted noise model."""
        x, psd, _ = mixture
        result = run_vem(x, ConstantSpeechModel(psd), EngineConfig(K=1, max_iters=500, tol=1e-9))
        speech_var = np.repeat(psd[:, None], x.n_frames, axis=1)
        closed_form = wiener_gain(speech_var, result.nmf.variance()) * x.data
        assert _relative(result.state.mu_s, closed_form) < 0.01, "VEM should match the Wiener filter"

    def test_deterministic(self, small_model):
        """Same seed, same result."""
        x = stft(random_waveform(3, 400), 16, 4)
        cfg = EngineConfig(K=2, D=2, max_iters=4, seed=5)
        a = run_vem(x, small_model, cfg)
        b = run_vem(x, small_model, cfg)
        np.testing.assert_array_equal(a.state.mu_s, b.state.mu_s)
        assert [r.free_energy for r in a.report.iterations] == [r.free_energy for r in b.report.iterations]

    def test_report(self, mixture):
        """Timings are positive, the config is echoed and the first iteration has no change measure."""
        x, psd, _ = mixture
        result = run_vem(x, ConstantSpeechModel(psd), EngineConfig(K=3, max_iters=6, tol=1e-12))
        records = result.report.iterations
        assert len(records) == 6, "tol=1e-12 should not be reached in 6 iterations"
        assert all(r.elapsed_ms > 0 for r in records), "timings must be positive"
        assert records[0].rel_change is None and records[1].rel_change is not None
        assert result.report.config["K"] == 3 and result.report.config["method"] == "vem"
        assert not result.report.converged

    def test_smaller_tolerance_needs_more_iterations(self, mixture):
        """Tightening tol never shortens the run."""
        x, psd, _ = mixture
        m = ConstantSpeechModel(psd)
        loose = run_vem(x, m, EngineConfig(K=2, tol=1e-2, max_iters=300))
        tight = run_vem(x, m, EngineConfig(K=2, tol=1e-5, max_iters=300))
        assert loose.report.converged, "a loose tolerance should be reached"
        assert tight.report.iterations_used >= loose.report.iterations_used

    def test_sdr_tracking(self):
        """With a reference every iteration records an SI-SDR and the final value is reported."""
        speech = random_waveform(1, 600)
        noise = random_waveform(2, 600)
        mix = Waveform(speech.samples + 0.5 * noise.samples, 16000)
        x = stft(mix, 30, 15)
        psd = np.mean(stft(speech, 30, 15).power, axis=1)
        result = run_vem(x, ConstantSpeechModel(psd), EngineConfig(K=2, max_iters=4), reference=speech)
        trace = result.report.sdr_trace
        assert trace is not None and len(trace) == result.report.iterations_used
        assert result.report.final_si_sdr_db == trace[-1]

    def test_diverged(self, mixture):
        """A decoder producing NaN aborts with InferenceDivergedError."""
        x, psd, _ = mixture
        with np.errstate(all="ignore"), pytest.raises(InferenceDivergedError) as info:
            run_vem(x, ConstantSpeechModel(np.full_like(psd, np.nan)), EngineConfig(max_iters=3))
        assert info.value.iteration == 1

    def test_dimension_mismatch(self, mixture, small_model):
        """The model's F must match the mixture."""
        x, _, _ = mixture
        with pytest.raises(DimensionMismatchError):
            run_vem(x, small_model, EngineConfig(max_iters=1))


class TestHeuristic:
    """Heuristic E-z step."""

    def test_matches_vem_when_encoder_ignores_input(self, mixture):
        """If the encoder does not look at its input, dropping Sigma_ss changes nothing."""
        x, psd, _ = mixture
        cfg = EngineConfig(K=2, max_iters=5)
        vem = run_vem(x, ConstantSpeechModel(psd), cfg)
        heuristic = run_heuristic(x, ConstantSpeechModel(psd), cfg)
        np.testing.assert_array_equal(vem.state.mu_s, heuristic.state.mu_s)
        assert heuristic.method is Method.HEURISTIC

    def test_differs_with_a_real_encoder(self, small_model):
        """With a real encoder the two E-z steps give different posteriors."""
        x = stft(random_waveform(4, 400), 16, 4)
        cfg = EngineConfig(K=2, max_iters=2)
        vem = run_vem(x, small_model, cfg)
        heuristic = run_heuristic(x, small_model, cfg)
        assert not np.array_equal(vem.state.z_mean, heuristic.state.z_mean)


class TestMcem:
    """Monte Carlo EM."""

    def test_retained_samples(self, small_model):
        """Each iteration keeps D of 4D samples; mh reconstruction works from them."""
        x = stft(random_waveform(5, 400), 16, 4)
        cfg = EngineConfig(method=Method.MCEM, K=2, D=3, max_iters=2, mh=MhConfig(n_iters=4, keep_last=2))
        result = run_mcem(x, small_model, cfg)
        assert result.samples.samples.shape == (3, small_model.latent_dim, x.n_frames)
        assert result.state is None
        out = reconstruct(x, result.posterior, result.nmf, small_model, "mh", cfg)
        assert out.data.shape == x.data.shape

    def test_deterministic(self, small_model):
        """Same seed, same samples."""
        x = stft(random_waveform(6, 400), 16, 4)
        cfg = EngineConfig(method=Method.MCEM, K=2, D=2, max_iters=3, seed=1)
        a = run_mcem(x, small_model, cfg)
        b = run_mcem(x, small_model, cfg)
        np.testing.assert_array_equal(a.samples.samples, b.samples.samples)
        np.testing.assert_array_equal(a.nmf.W, b.nmf.W)

    def test_agrees_with_vem_on_latent_free_model(self, mixture):
        """Without latent dependence MCEM and VEM fit the same noise model and both match the Wiener filter."""
        x, psd, _ = mixture
        m = ConstantSpeechModel(psd)
        vem = run_vem(x, m, EngineConfig(K=1, max_iters=2000, tol=1e-10))
        mcem = run_mcem(x, m, EngineConfig(method=Method.MCEM, K=1, D=2, max_iters=2000, tol=1e-10))
        speech_var = np.repeat(psd[:, None], x.n_frames, axis=1)
        closed_form = wiener_gain(speech_var, mcem.nmf.variance()) * x.data
        assert _relative(mcem.samples.mu_s, closed_form) < 0.01, "MCEM should match the Wiener filter"
        assert _relative(mcem.samples.mu_s, vem.state.mu_s) < 0.01, "MCEM and VEM should agree"

    def test_mh_tracking_scores_the_mh_reconstruction(self, small_model):
        """With track_mode mh the last traced SI-SDR is that of the returned MH-Wiener estimate."""
        speech = random_waveform(7, 400)
        x = stft(Waveform(speech.samples + 0.3 * random_waveform(8, 400).samples, 16000), 16, 4)
        mh = MhConfig(n_iters=6, keep_last=3)
        cfg = EngineConfig(method=Method.MCEM, K=2, D=2, max_iters=3, tol=1e-12, mh=mh, track_mode=ReconMode.MH)
        result = run_mcem(x, small_model, cfg, reference=speech)
        estimate = istft(reconstruct(x, result.posterior, result.nmf, small_model, "mh", cfg), speech.sample_rate)
        assert result.report.sdr_trace[-1] == pytest.approx(si_sdr(speech, estimate), rel=1e-12)
        gain_only = run_mcem(x, small_model, cfg.model_copy(update={"track_mode": ReconMode.Z}), reference=speech)
        assert gain_only.report.sdr_trace != result.report.sdr_trace, "mh tracking should not score the E-step mean"


class TestDispatch:
    """enhance() picks the engine from the config."""

    @pytest.mark.parametrize("method", list(Method))
    def test_method(self, mixture, method):
        """The result carries the requested method."""
        x, psd, _ = mixture
        result = enhance(x, ConstantSpeechModel(psd), EngineConfig(method=method, K=1, max_iters=2))
        assert result.method is method
        assert result.report.method is method
