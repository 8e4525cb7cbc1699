"""Exception hierarchy for the numerical core."""


class VemseError(Exception):
    """Base class for every error raised by vemse_core."""


class SignalError(VemseError, ValueError):
    """Empty or non-finite signal, or inconsistent STFT/WAV metadata."""


class DimensionMismatchError(VemseError, ValueError):
    pass


class NonFiniteError(VemseError, ValueError):
    pass


class DomainError(VemseError, ValueError):
    """Argument outside the mathematical domain (nonpositive variance, zero energy)."""


class InvalidModeError(VemseError, ValueError):
    pass


class TrainingDivergedError(VemseError):
    def __init__(self, epoch: int, batch: int, loss: float) -> None:
        super().__init__(f"training loss became non-finite ({loss}) at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
        self.loss = loss


class InferenceDivergedError(VemseError):
    def __init__(self, iteration: int, quantity: str) -> None:
        super().__init__(f"non-finite {quantity} at iteration {iteration}")
        self.iteration = iteration
        self.quantity = quantity


class ModelStoreError(VemseError):
    """Base class for model file errors."""


class BadMagicError(ModelStoreError):
    pass


class VersionMismatchError(ModelStoreError):
    pass


class ShapeInconsistencyError(ModelStoreError):
    pass


class NonFiniteWeightsError(ModelStoreError):
    pass


class TruncatedPayloadError(ModelStoreError):
    pass
