"""
VAE speech model: encoder q(z|s), decoder sigma_f^2(z), reparametrized sampling
and the evidence lower bound.

Both networks have one tanh hidden layer (128 units by default) and linear
heads predicting log-variances, which are exponentiated so every variance is
strictly positive. The encoder sees the power spectrum through a fixed
per-frequency standardisation of its logarithm, so its input stays on a unit
scale whatever the signal level; the shift and scale are set from training
data by ``fit_input_normalization`` and are not trained. Arrays are column-major in the signal sense: one column
per STFT frame, F rows for spectra and L rows for latent codes.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from vemse_common.utils.seeding import MODEL_INIT, make_rng

from vemse_core.errors import DimensionMismatchError, DomainError, NonFiniteError
from vemse_core.nmf import is_divergence

HIDDEN_UNITS = 128

# Floor applied to power values entering the Itakura-Saito term so silent bins stay finite.
POWER_FLOOR = 1e-10

# Fixed input standardisation, stored with the weights but never updated by training.
INPUT_NAMES: tuple[str, ...] = ("encoder.input.shift", "encoder.input.scale")

TRAINABLE_NAMES: tuple[str, ...] = (
    "encoder.hidden.weight",
    "encoder.hidden.bias",
    "encoder.mean.weight",
    "encoder.mean.bias",
    "encoder.logvar.weight",
    "encoder.logvar.bias",
    "decoder.hidden.weight",
    "decoder.hidden.bias",
    "decoder.logvar.weight",
    "decoder.logvar.bias",
)

PARAM_NAMES: tuple[str, ...] = (*INPUT_NAMES, *TRAINABLE_NAMES)

# Smallest per-frequency scale of the log-power input.
MIN_INPUT_SCALE = 0.1


def param_shapes(n_freqs: int, latent_dim: int, hidden: int = HIDDEN_UNITS) -> dict[str, tuple[int, ...]]:
    F, L, H = n_freqs, latent_dim, hidden
    return {
        "encoder.input.shift": (F,),
        "encoder.input.scale": (F,),
        "encoder.hidden.weight": (H, F),
        "encoder.hidden.bias": (H,),
        "encoder.mean.weight": (L, H),
        "encoder.mean.bias": (L,),
        "encoder.logvar.weight": (L, H),
        "encoder.logvar.bias": (L,),
        "decoder.hidden.weight": (H, L),
        "decoder.hidden.bias": (H,),
        "decoder.logvar.weight": (F, H),
        "decoder.logvar.bias": (F,),
    }


@dataclass(frozen=True)
class EncoderOutput:
    """Parameters of the diagonal Gaussian q(z_t | s_t), one column per frame."""

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self) -> None:
        if self.mean.shape != self.variance.shape:
            raise DimensionMismatchError(
                f"mean {self.mean.shape} and variance {self.variance.shape} differ"
            )
        if np.any(self.variance <= 0):
            raise DomainError("encoder variance must be strictly positive")


@dataclass(frozen=True)
class LatentBatch:
    z: np.ndarray

    def __post_init__(self) -> None:
        if self.z.ndim != 2:
            raise DimensionMismatchError(f"latent batch must be L x N, got {self.z.shape}")
        if not np.all(np.isfinite(self.z)):
            raise NonFiniteError("latent batch contains non-finite values")


@dataclass(frozen=True)
class VaeModel:
    """Immutable set of encoder (phi) and decoder (theta) parameters."""

    params: Mapping[str, np.ndarray]

    def __post_init__(self) -> None:
        missing = [name for name in PARAM_NAMES if name not in self.params]
        if missing:
            raise DimensionMismatchError(f"missing parameters: {missing}")
        extra = sorted(set(self.params) - set(PARAM_NAMES))
        if extra:
            raise DimensionMismatchError(f"unknown parameters: {extra}")

        params = {name: np.asarray(self.params[name], dtype=np.float64) for name in PARAM_NAMES}
        hidden, n_freqs = params["encoder.hidden.weight"].shape
        latent_dim = params["encoder.mean.weight"].shape[0]
        expected = param_shapes(n_freqs, latent_dim, hidden)
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise DimensionMismatchError(
                    f"{name} has shape {params[name].shape}, expected {shape}"
                )
            if not np.all(np.isfinite(params[name])):
                raise NonFiniteError(f"{name} contains non-finite weights")
        if np.any(params["encoder.input.scale"] <= 0):
            raise DomainError("encoder.input.scale must be strictly positive")
        object.__setattr__(self, "params", params)

    @property
    def n_freqs(self) -> int:
        return int(self.params["encoder.hidden.weight"].shape[1])

    @property
    def latent_dim(self) -> int:
        return int(self.params["encoder.mean.weight"].shape[0])

    @property
    def hidden(self) -> int:
        return int(self.params["encoder.hidden.weight"].shape[0])

    def encode(self, power_spec: np.ndarray) -> EncoderOutput:
        return encode(self, power_spec)

    def decode(self, z: "np.ndarray | LatentBatch") -> np.ndarray:
        return decode(self, z)

    def replace_params(self, params: Mapping[str, np.ndarray]) -> "VaeModel":
        return VaeModel({**self.params, **params})


def init_model(
    n_freqs: int, latent_dim: int, hidden: int = HIDDEN_UNITS, seed: int = 0
) -> VaeModel:
    """Glorot-uniform weights, zero biases, identity input standardisation."""
    rng = make_rng(seed, MODEL_INIT)
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(n_freqs, latent_dim, hidden).items():
        if name == "encoder.input.scale":
            params[name] = np.ones(shape)
        elif name.endswith((".bias", ".shift")):
            params[name] = np.zeros(shape)
        else:
            fan_out, fan_in = shape
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-limit, limit, size=shape)
    return VaeModel(params)


def zero_model(n_freqs: int, latent_dim: int, hidden: int = HIDDEN_UNITS) -> VaeModel:
    params = {name: np.zeros(shape) for name, shape in param_shapes(n_freqs, latent_dim, hidden).items()}
    params["encoder.input.scale"] = np.ones(n_freqs)
    return VaeModel(params)


def fit_input_normalization(m: VaeModel, frames: np.ndarray) -> VaeModel:
    """
    Set the encoder input standardisation from an F x T matrix of training frames.

    The shift is the per-frequency mean of the floored log-power and the scale its
    standard deviation, floored at ``MIN_INPUT_SCALE``. The decoder output bias is
    moved to the matching log-variance (mean log-power plus Euler's constant, the
    offset of the log of an exponential variable) so decoded variances start at
    the level of the data.
    """
    power = _as_columns(frames, m.n_freqs, "training frames")
    if power.shape[1] == 0:
        raise DomainError("cannot fit the input normalization on zero frames")
    if np.any(power < 0):
        raise DomainError("training frames must be nonnegative")
    log_power = np.log(np.maximum(power, POWER_FLOOR))
    shift = log_power.mean(axis=1)
    return m.replace_params(
        {
            "encoder.input.shift": shift,
            "encoder.input.scale": np.maximum(log_power.std(axis=1), MIN_INPUT_SCALE),
            "decoder.logvar.bias": shift + np.euler_gamma,
        }
    )


def _as_columns(x: np.ndarray, rows: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != rows:
        raise DimensionMismatchError(f"{what} must have {rows} rows, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{what} contains non-finite values")
    return x


def _encoder_input(p: Mapping[str, np.ndarray], power: np.ndarray) -> np.ndarray:
    log_power = np.log(np.maximum(power, POWER_FLOOR))
    return (log_power - p["encoder.input.shift"][:, None]) / p["encoder.input.scale"][:, None]


def _encoder_forward(p: Mapping[str, np.ndarray], u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    h = np.tanh(p["encoder.hidden.weight"] @ u + p["encoder.hidden.bias"][:, None])
    mean = p["encoder.mean.weight"] @ h + p["encoder.mean.bias"][:, None]
    logvar = p["encoder.logvar.weight"] @ h + p["encoder.logvar.bias"][:, None]
    return h, mean, logvar


def _decoder_forward(p: Mapping[str, np.ndarray], z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h = np.tanh(p["decoder.hidden.weight"] @ z + p["decoder.hidden.bias"][:, None])
    logvar = p["decoder.logvar.weight"] @ h + p["decoder.logvar.bias"][:, None]
    return h, logvar


def encode(m: VaeModel, power_spec: np.ndarray) -> EncoderOutput:
    """Column-wise q(z_t | s_t) from an F x N power spectrogram."""
    power = _as_columns(power_spec, m.n_freqs, "power spectrogram")
    if np.any(power < 0):
        raise DomainError("power spectrogram must be nonnegative")
    _, mean, logvar = _encoder_forward(m.params, _encoder_input(m.params, power))
    return EncoderOutput(mean=mean, variance=np.exp(logvar))


def decode(m: VaeModel, z: "np.ndarray | LatentBatch") -> np.ndarray:
    """sigma_f^2(z_t) for every column of ``z``; strictly positive."""
    codes = _as_columns(z.z if isinstance(z, LatentBatch) else z, m.latent_dim, "latent batch")
    _, logvar = _decoder_forward(m.params, codes)
    return np.exp(logvar)


def reparam_sample(out: EncoderOutput, rng_seed: int, count: int) -> list[LatentBatch]:
    """``count`` draws z = mean + sqrt(variance) * eps, reproducible given the seed."""
    if count < 1:
        raise DomainError(f"sample count must be at least 1, got {count}")
    rng = make_rng(rng_seed)
    eps = rng.standard_normal((count, *out.mean.shape))
    std = np.sqrt(out.variance)
    return [LatentBatch(out.mean + std * eps[d]) for d in range(count)]


def kl_divergence(out: EncoderOutput) -> float:
    """KL(q || N(0, I)) summed over latents and frames; always >= 0."""
    mean, var = out.mean, out.variance
    return float(0.5 * np.sum(mean**2 + var - np.log(var) - 1.0))


def elbo(m: VaeModel, power_spec: np.ndarray, z_samples: Sequence[LatentBatch | np.ndarray]) -> float:
    """
    Evidence lower bound of a batch of frames.

    The reconstruction expectation is the average over ``z_samples`` of the
    Itakura-Saito divergence between the observed power and the decoded
    variance; it enters negatively, and the KL term to the standard normal prior
    is subtracted.
    """
    if not z_samples:
        raise DomainError("at least one latent sample is required")
    power = _as_columns(power_spec, m.n_freqs, "power spectrogram")
    out = encode(m, power)
    floored = np.maximum(power, POWER_FLOOR)
    recon = 0.0
    for z in z_samples:
        codes = z.z if isinstance(z, LatentBatch) else np.asarray(z)
        if codes.shape != out.mean.shape:
            raise DimensionMismatchError(
                f"latent sample shape {codes.shape} does not match {out.mean.shape}"
            )
        recon += float(np.sum(is_divergence(floored, decode(m, codes))))
    recon /= len(z_samples)
    return -recon - kl_divergence(out)


def loss_and_grad(
    m: VaeModel, power_spec: np.ndarray, eps: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """
    Negative ELBO per frame for one reparametrized draw, and its gradient with
    respect to every tensor in ``TRAINABLE_NAMES``.

    ``eps`` is the L x B standard-normal noise of the reparametrization, passed in
    so the loss is a deterministic function of the parameters.
    """
    p = m.params
    power = _as_columns(power_spec, m.n_freqs, "power spectrogram")
    floored = np.maximum(power, POWER_FLOOR)
    batch = power.shape[1]
    if eps.shape != (m.latent_dim, batch):
        raise DimensionMismatchError(f"eps must be {(m.latent_dim, batch)}, got {eps.shape}")

    u = _encoder_input(p, power)
    h1, mean, logvar = _encoder_forward(p, u)
    std = np.exp(0.5 * logvar)
    var = std**2
    z = mean + std * eps
    h2, g = _decoder_forward(p, z)
    ratio = floored * np.exp(-g)

    recon = np.sum(ratio - np.log(ratio) - 1.0)
    kl = 0.5 * np.sum(mean**2 + var - logvar - 1.0)
    loss = float((recon + kl) / batch)

    dg = (1.0 - ratio) / batch
    grads = {
        "decoder.logvar.weight": dg @ h2.T,
        "decoder.logvar.bias": dg.sum(axis=1),
    }
    da2 = (p["decoder.logvar.weight"].T @ dg) * (1.0 - h2**2)
    grads["decoder.hidden.weight"] = da2 @ z.T
    grads["decoder.hidden.bias"] = da2.sum(axis=1)

    dz = p["decoder.hidden.weight"].T @ da2
    dmean = dz + mean / batch
    dlogvar = 0.5 * dz * eps * std + 0.5 * (var - 1.0) / batch
    grads["encoder.mean.weight"] = dmean @ h1.T
    grads["encoder.mean.bias"] = dmean.sum(axis=1)
    grads["encoder.logvar.weight"] = dlogvar @ h1.T
    grads["encoder.logvar.bias"] = dlogvar.sum(axis=1)

    da1 = (p["encoder.mean.weight"].T @ dmean + p["encoder.logvar.weight"].T @ dlogvar) * (1.0 - h1**2)
    grads["encoder.hidden.weight"] = da1 @ u.T
    grads["encoder.hidden.bias"] = da1.sum(axis=1)

    return loss, grads
