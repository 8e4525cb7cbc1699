"""Synthetic inputs shared by the test suites."""

import numpy as np
from vemse_common.utils.seeding import make_rng
from vemse_core.dsp import ComplexSpectrogram, Waveform

# Keys outside the purpose range used by the package itself.
_TEST_STREAM = 1000


def random_waveform(seed: int, n_samples: int = 16000, sample_rate: int = 16000) -> Waveform:
    return Waveform(make_rng(seed, _TEST_STREAM).standard_normal(n_samples), sample_rate)


def complex_gaussian(rng: np.random.Generator, variance: np.ndarray) -> np.ndarray:
    """Proper complex Gaussian draws with the given per-entry variance."""
    scale = np.sqrt(np.asarray(variance) / 2.0)
    return scale * (rng.standard_normal(np.shape(variance)) + 1j * rng.standard_normal(np.shape(variance)))


def latent_free_mixture(
    seed: int, frame_size: int = 30, hop: int = 15, n_frames: int = 40, speech_level: float = 0.1
) -> tuple[ComplexSpectrogram, np.ndarray, np.ndarray]:
    """
    Mixture spectrogram drawn from the mixture model with a known speech PSD and a
    rank-1 noise variance. Returns the spectrogram, the speech PSD (F,) and the true
    noise variance (F x N).
    """
    rng = make_rng(seed, _TEST_STREAM, 1)
    F = frame_size // 2 + 1
    speech_psd = speech_level * rng.uniform(0.5, 1.5, size=F)
    noise_var = np.outer(rng.uniform(0.5, 2.0, size=F), rng.uniform(0.5, 2.0, size=n_frames))
    s = complex_gaussian(rng, np.repeat(speech_psd[:, None], n_frames, axis=1))
    n = complex_gaussian(rng, noise_var)
    return ComplexSpectrogram(s + n, frame_size, hop), speech_psd, noise_var
