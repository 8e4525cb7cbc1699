"""Stub speech models, reference oracles and synthetic signals for the test suites."""

from vemse_test_utils.oracles import (
    central_difference,
    is_cost_oracle,
    mlp_decode,
    mlp_encode,
    naive_rdft,
    relative_error,
    sine_window_oracle,
    wiener_oracle,
)
from vemse_test_utils.signals import complex_gaussian, latent_free_mixture, random_waveform
from vemse_test_utils.stubs import ConstantSpeechModel, SequenceDecoderModel, gaussian_logdensity

__all__ = [
    "ConstantSpeechModel",
    "SequenceDecoderModel",
    "central_difference",
    "complex_gaussian",
    "gaussian_logdensity",
    "is_cost_oracle",
    "latent_free_mixture",
    "mlp_decode",
    "mlp_encode",
    "naive_rdft",
    "random_waveform",
    "relative_error",
    "sine_window_oracle",
    "wiener_oracle",
]
