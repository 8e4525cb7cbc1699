"""
Synthetic stand-ins for the speech and noise corpora.

Toy "speech" is a handful of harmonics of a slowly wandering fundamental, gated
by syllable-like bursts, plus a little autoregressive breath noise so that no
frame is ever silent. Toy noise is stationary colored Gaussian noise. Both are
fully determined by their seeds.
"""

import hashlib
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from vemse_common.utils.seeding import DATASET, NOISE, make_rng

from vemse_core.dsp import Waveform, stft
from vemse_core.errors import DomainError
from vemse_core.metrics import mix_at_snr

SAMPLE_RATE = 16000
TOY_RMS = 0.01

# AR(2) filters: a short-memory breath component and a low-pass-ish stationary noise
_BREATH_AR = (1.0, -0.6, 0.2)
_NOISE_AR = (1.0, -1.3, 0.4)


def _scale_to_rms(x: np.ndarray, rms: float) -> np.ndarray:
    return x * (rms / np.sqrt(np.mean(x**2)))


def _syllable_envelope(rng: np.random.Generator, n: int, sample_rate: int) -> np.ndarray:
    t = np.arange(n) / sample_rate
    duration = n / sample_rate
    envelope = np.zeros(n)
    for _ in range(max(1, int(np.ceil(duration * rng.uniform(2.0, 4.0))))):
        center = rng.uniform(0.0, duration)
        width = rng.uniform(0.1, 0.3)
        inside = np.abs(t - center) < width / 2
        envelope[inside] += rng.uniform(0.5, 1.0) * np.cos(np.pi * (t[inside] - center) / width) ** 2
    return np.minimum(envelope, 1.0)


def toy_utterance(rng: np.random.Generator, sample_rate: int = SAMPLE_RATE) -> Waveform:
    n = int(rng.uniform(1.0, 3.0) * sample_rate)
    t = np.arange(n) / sample_rate

    f0 = rng.uniform(100.0, 250.0) * (
        1.0 + 0.05 * np.sin(2 * np.pi * rng.uniform(2.0, 6.0) * t + rng.uniform(0, 2 * np.pi))
    )
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    n_partials = int(rng.integers(2, 6))
    harmonics = np.sort(rng.choice(np.arange(1, 9), size=n_partials, replace=False))

    voiced = np.zeros(n)
    for k in harmonics:
        amplitude = rng.uniform(0.5, 1.0) / k
        tremolo = 1.0 + 0.3 * np.sin(2 * np.pi * rng.uniform(0.5, 3.0) * t + rng.uniform(0, 2 * np.pi))
        voiced += amplitude * tremolo * np.sin(k * phase + rng.uniform(0, 2 * np.pi))

    envelope = _syllable_envelope(rng, n, sample_rate)
    breath = lfilter([1.0], _BREATH_AR, rng.standard_normal(n))
    breath *= 0.05 * np.std(voiced) / np.std(breath)
    signal = envelope * voiced + (0.2 + envelope) * breath

    return Waveform(_scale_to_rms(signal, TOY_RMS), sample_rate)


def make_toy_dataset(
    seed: int, n_utterances: int, sample_rate: int = SAMPLE_RATE, split: int = 0
) -> list[Waveform]:
    """``n_utterances`` synthetic utterances of 1-3 s; ``split`` selects disjoint streams (train/test)."""
    if n_utterances < 1:
        raise DomainError(f"n_utterances must be at least 1, got {n_utterances}")
    return [toy_utterance(make_rng(seed, DATASET, split, u), sample_rate) for u in range(n_utterances)]


def make_stationary_noise(
    seed: int,
    n_samples: int,
    sample_rate: int = SAMPLE_RATE,
    rms: float = TOY_RMS,
    stream: int = 0,
) -> Waveform:
    """Colored Gaussian noise with a time-invariant spectrum."""
    if n_samples < 1:
        raise DomainError(f"n_samples must be at least 1, got {n_samples}")
    white = make_rng(seed, NOISE, stream).standard_normal(n_samples + 1024)
    colored = lfilter([1.0], _NOISE_AR, white)[1024:]
    return Waveform(_scale_to_rms(colored, rms), sample_rate)


def power_frames(waveforms: Sequence[Waveform], frame_size: int = 1024, hop: int = 256) -> np.ndarray:
    """Concatenate the power spectrograms of ``waveforms`` into one F x T matrix."""
    if not waveforms:
        raise DomainError("no waveforms given")
    return np.concatenate([stft(w, frame_size, hop).power for w in waveforms], axis=1)


def dataset_checksum(waveforms: Sequence[Waveform], decimals: int | None = None) -> str:
    """
    SHA-256 over sample rates and little-endian float64 samples.

    With ``decimals`` the samples are rounded first, which hides last-bit
    differences between platform math libraries.
    """
    digest = hashlib.sha256()
    for w in waveforms:
        # + 0.0 folds -0.0 into 0.0
        samples = w.samples if decimals is None else np.round(w.samples, decimals) + 0.0
        digest.update(np.int64(w.sample_rate).tobytes())
        digest.update(np.ascontiguousarray(samples, dtype="<f8").tobytes())
    return digest.hexdigest()


@dataclass(frozen=True)
class ToyMixture:
    index: int
    speech: Waveform
    noise: Waveform
    mixture: Waveform


def make_toy_mixtures(seed: int, n_mixtures: int, snr_db: float = 0.0) -> list[ToyMixture]:
    """Held-out toy utterances mixed with stationary noise at ``snr_db``."""
    speech = make_toy_dataset(seed, n_mixtures, split=1)
    mixtures = []
    for i, s in enumerate(speech):
        noise = make_stationary_noise(seed, len(s), s.sample_rate, stream=i)
        mixture, scaled = mix_at_snr(s, noise, snr_db)
        mixtures.append(ToyMixture(index=i, speech=s, noise=scaled, mixture=mixture))
    return mixtures
