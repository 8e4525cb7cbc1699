"""VAE speech model, its training loop and the synthetic training data."""

from vemse_core.vae.dataset import (
    ToyMixture,
    dataset_checksum,
    make_stationary_noise,
    make_toy_dataset,
    make_toy_mixtures,
    power_frames,
)
from vemse_core.vae.model import (
    INPUT_NAMES,
    PARAM_NAMES,
    TRAINABLE_NAMES,
    EncoderOutput,
    LatentBatch,
    VaeModel,
    decode,
    elbo,
    encode,
    fit_input_normalization,
    init_model,
    kl_divergence,
    loss_and_grad,
    reparam_sample,
    zero_model,
)
from vemse_core.vae.training import Adam, EpochRecord, TrainingResult, train

__all__ = [
    "INPUT_NAMES",
    "PARAM_NAMES",
    "TRAINABLE_NAMES",
    "Adam",
    "EncoderOutput",
    "EpochRecord",
    "LatentBatch",
    "ToyMixture",
    "TrainingResult",
    "VaeModel",
    "dataset_checksum",
    "decode",
    "elbo",
    "encode",
    "fit_input_normalization",
    "init_model",
    "kl_divergence",
    "loss_and_grad",
    "make_stationary_noise",
    "make_toy_dataset",
    "make_toy_mixtures",
    "power_frames",
    "reparam_sample",
    "train",
    "zero_model",
]
