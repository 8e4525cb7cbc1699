"""
Adam training of the VAE with validation-based early stopping.

Each step draws one reparametrization sample per frame. The validation loss uses
a fixed noise draw made once before training, so successive epochs are compared
on the same objective.
"""

import logging
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np
from vemse_common.schemas import TrainConfig
from vemse_common.utils.seeding import TRAINING, make_rng

from vemse_core.errors import DomainError, TrainingDivergedError
from vemse_core.vae.model import VaeModel, _as_columns, loss_and_grad

logger = logging.getLogger(__name__)

_VALIDATION_STREAM = 1
_SHUFFLE_STREAM = 2


class Adam:
    """Adam optimizer over a dict of named parameter arrays."""

    def __init__(
        self,
        params: Mapping[str, np.ndarray],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {name: np.zeros_like(value) for name, value in params.items()}
        self._v = {name: np.zeros_like(value) for name, value in params.items()}

    def step(
        self, params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]
    ) -> dict[str, np.ndarray]:
        """
        Return updated parameters; ``grads`` are gradients of a loss to minimize.

        Parameters without an entry in ``grads`` are passed through unchanged.
        """
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        updated = {}
        for name, value in params.items():
            if name not in grads:
                updated[name] = value
                continue
            g = grads[name]
            self._m[name] = self.beta1 * self._m[name] + (1.0 - self.beta1) * g
            self._v[name] = self.beta2 * self._v[name] + (1.0 - self.beta2) * g * g
            m_hat = self._m[name] / bias1
            v_hat = self._v[name] / bias2
            updated[name] = value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return updated


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    improved: bool
    elapsed_s: float

    def as_record(self) -> dict[str, object]:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "improved": self.improved,
            "elapsed_s": self.elapsed_s,
        }


@dataclass
class TrainingResult:
    """Best-validation model and the per-epoch history (losses are negative ELBO per frame)."""

    model: VaeModel
    history: list[EpochRecord] = field(default_factory=list)

    @property
    def best_epoch(self) -> int:
        return min(self.history, key=lambda r: r.val_loss).epoch


def split_frames(n_frames: int, validation_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random train/validation split of frame indices.

    When the validation share would be empty (or would swallow everything) the
    training frames double as validation frames.
    """
    order = make_rng(seed, TRAINING, 0).permutation(n_frames)
    n_val = int(round(validation_fraction * n_frames))
    if n_val == 0 or n_val >= n_frames:
        if validation_fraction > 0:
            logger.warning(
                "dataset of %d frames too small for a %.0f%% validation split; validating on training frames",
                n_frames,
                100 * validation_fraction,
            )
        return order, order
    return order[n_val:], order[:n_val]


def _batched_loss(model: VaeModel, frames: np.ndarray, eps: np.ndarray, batch: int) -> float:
    total = 0.0
    for start in range(0, frames.shape[1], batch):
        stop = start + batch
        loss, _ = loss_and_grad(model, frames[:, start:stop], eps[:, start:stop])
        total += loss * (min(stop, frames.shape[1]) - start)
    return total / frames.shape[1]


def train(
    model: VaeModel,
    frames: np.ndarray,
    config: TrainConfig,
    on_epoch: Callable[[EpochRecord], None] | None = None,
) -> TrainingResult:
    """
    Fit ``model`` to an F x T matrix of power-spectrogram frames.

    Training stops when the validation loss has not improved for ``patience``
    consecutive epochs (at the first non-improving epoch when ``patience`` is 0)
    or after ``max_epochs``. Returns the parameters of the best validation epoch.
    """
    data = _as_columns(frames, model.n_freqs, "training frames")
    n_frames = data.shape[1]
    if n_frames == 0:
        raise DomainError("training set is empty")

    train_idx, val_idx = split_frames(n_frames, config.validation_fraction, config.seed)
    train_frames = data[:, train_idx]
    val_frames = data[:, val_idx]
    val_eps = make_rng(config.seed, TRAINING, _VALIDATION_STREAM).standard_normal(
        (model.latent_dim, val_frames.shape[1])
    )
    rng = make_rng(config.seed, TRAINING, _SHUFFLE_STREAM)

    logger.info(
        "training VAE F=%d L=%d on %d frames (%d validation), lr=%g batch=%d patience=%d",
        model.n_freqs,
        model.latent_dim,
        train_frames.shape[1],
        val_frames.shape[1],
        config.lr,
        config.batch,
        config.patience,
    )

    params = dict(model.params)
    optimizer = Adam(params, lr=config.lr)
    best_params = params
    best_val = np.inf
    stale = 0
    history: list[EpochRecord] = []

    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(train_frames.shape[1])
        total = 0.0
        for b, start in enumerate(range(0, order.size, config.batch)):
            batch = train_frames[:, order[start : start + config.batch]]
            eps = rng.standard_normal((model.latent_dim, batch.shape[1]))
            loss, grads = loss_and_grad(VaeModel(params), batch, eps)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise TrainingDivergedError(epoch, b, loss)
            params = optimizer.step(params, grads)
            total += loss * batch.shape[1]

        current = VaeModel(params)
        val_loss = _batched_loss(current, val_frames, val_eps, config.batch)
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(epoch, -1, val_loss)

        improved = val_loss < best_val
        if improved:
            best_val = val_loss
            best_params = params
            stale = 0
        else:
            stale += 1

        record = EpochRecord(
            epoch=epoch,
            train_loss=total / train_frames.shape[1],
            val_loss=val_loss,
            improved=improved,
            elapsed_s=time.perf_counter() - started,
        )
        history.append(record)
        logger.info(
            "epoch %d train=%.5f val=%.5f%s",
            epoch,
            record.train_loss,
            val_loss,
            " *" if improved else "",
        )
        if on_epoch is not None:
            on_epoch(record)

        if stale >= max(config.patience, 1):
            logger.info("early stop at epoch %d, best epoch %d", epoch, epoch - stale)
            break

    return TrainingResult(model=VaeModel(best_params), history=history)
