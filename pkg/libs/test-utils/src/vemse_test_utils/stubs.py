"""Speech-model stand-ins whose posterior and decoder are known in closed form."""

from collections.abc import Sequence

import numpy as np
from vemse_core.vae import EncoderOutput


class ConstantSpeechModel:
    """
    Latent-free speech model.

    The decoder ignores ``z`` and returns ``psd`` (F values, or an F x N matrix
    matching the number of frames). The encoder returns a fixed N(mean, variance)
    for every frame.
    """

    def __init__(self, psd: np.ndarray, latent_dim: int = 2, mean: float = 0.0, variance: float = 1.0) -> None:
        self.psd = np.asarray(psd, dtype=np.float64)
        self._latent_dim = latent_dim
        self._mean = mean
        self._variance = variance

    @property
    def n_freqs(self) -> int:
        return int(self.psd.shape[0])

    @property
    def latent_dim(self) -> int:
        return self._latent_dim

    def encode(self, power_spec: np.ndarray) -> EncoderOutput:
        n = np.asarray(power_spec).reshape(self.n_freqs, -1).shape[1]
        shape = (self._latent_dim, n)
        return EncoderOutput(mean=np.full(shape, self._mean), variance=np.full(shape, self._variance))

    def decode(self, z: np.ndarray) -> np.ndarray:
        n = np.asarray(z).reshape(self._latent_dim, -1).shape[1]
        if self.psd.ndim == 2:
            return self.psd.copy()
        return np.repeat(self.psd[:, None], n, axis=1)


class SequenceDecoderModel(ConstantSpeechModel):
    """Decoder that returns ``outputs[0]``, ``outputs[1]``, ... on successive calls, cycling."""

    def __init__(self, outputs: Sequence[np.ndarray], latent_dim: int = 2) -> None:
        super().__init__(outputs[0], latent_dim)
        self.outputs = [np.asarray(o, dtype=np.float64) for o in outputs]
        self.calls = 0

    def decode(self, z: np.ndarray) -> np.ndarray:
        out = self.outputs[self.calls % len(self.outputs)]
        self.calls += 1
        return out.copy()


def gaussian_logdensity(z: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Per-column log density of N(0, scale^2 I), up to a constant."""
    return -0.5 * np.sum((np.asarray(z) / scale) ** 2, axis=0)
