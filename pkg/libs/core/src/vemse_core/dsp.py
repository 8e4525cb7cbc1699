"""
Sine-window STFT analysis/synthesis and WAV I/O.

The analysis and synthesis windows are both the half-cycle sine window
``sin(pi * (n + 0.5) / frame_size)``. Signals are zero-padded with
``frame_size - hop`` samples at both ends (plus whatever is needed to complete
the last frame) so every original sample is covered by ``frame_size / hop``
frames; ``istft`` divides by the overlap-added squared window and trims the
padding, which makes ``istft(stft(x)) == x`` on all original samples.
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import soundfile as sf
from numpy.lib.stride_tricks import sliding_window_view

from vemse_core.errors import SignalError

logger = logging.getLogger(__name__)

_WSUM_FLOOR = 1e-12

WAV_SUBTYPES = ("PCM_16", "FLOAT")


@dataclass(frozen=True)
class Waveform:
    """Mono time-domain signal."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise SignalError(f"waveform must be 1-D, got shape {samples.shape}")
        if samples.size == 0:
            raise SignalError("waveform is empty")
        if not np.all(np.isfinite(samples)):
            raise SignalError("waveform contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise SignalError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @property
    def energy(self) -> float:
        return float(np.dot(self.samples, self.samples))


def _check_geometry(frame_size: int, hop: int) -> None:
    if frame_size <= 0 or frame_size % 2:
        raise SignalError(f"frame_size must be a positive even integer, got {frame_size}")
    if hop <= 0:
        raise SignalError(f"hop must be positive, got {hop}")
    if hop > frame_size:
        raise SignalError(f"hop ({hop}) exceeds frame_size ({frame_size})")
    if frame_size % hop:
        raise SignalError(f"hop ({hop}) must divide frame_size ({frame_size})")


@dataclass(frozen=True)
class ComplexSpectrogram:
    """
    F x N complex STFT coefficients with the geometry needed to invert them.

    ``length`` is the number of samples of the analysed signal; when it is
    missing, ``istft`` returns everything between the edge paddings.
    """

    data: np.ndarray
    frame_size: int
    hop: int
    length: int | None = None
    sample_rate: int | None = None

    def __post_init__(self) -> None:
        _check_geometry(self.frame_size, self.hop)
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2:
            raise SignalError(f"spectrogram must be 2-D, got shape {data.shape}")
        expected = self.frame_size // 2 + 1
        if data.shape[0] != expected:
            raise SignalError(
                f"spectrogram has {data.shape[0]} rows, frame_size {self.frame_size} "
                f"implies {expected}"
            )
        if data.shape[1] == 0:
            raise SignalError("spectrogram has no frames")
        if not np.all(np.isfinite(data)):
            raise SignalError("spectrogram contains non-finite coefficients")
        if self.length is not None and self.length <= 0:
            raise SignalError(f"length must be positive, got {self.length}")
        object.__setattr__(self, "data", data)

    @property
    def n_freqs(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_frames(self) -> int:
        return int(self.data.shape[1])

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.data) ** 2

    def with_data(self, data: np.ndarray) -> "ComplexSpectrogram":
        """Same geometry, new coefficients."""
        return replace(self, data=data)


def sine_window(frame_size: int) -> np.ndarray:
    n = np.arange(frame_size, dtype=np.float64)
    return np.sin(np.pi * (n + 0.5) / frame_size)


def _padding(n_samples: int, frame_size: int, hop: int) -> tuple[int, int]:
    pad = frame_size - hop
    total = n_samples + 2 * pad
    if total < frame_size:
        total = frame_size
    tail = total - n_samples - pad
    tail += (-(total - frame_size)) % hop
    return pad, tail


def stft(w: Waveform, frame_size: int = 1024, hop: int = 256) -> ComplexSpectrogram:
    """Sine-window STFT; returns ``frame_size // 2 + 1`` rows, one column per frame."""
    _check_geometry(frame_size, hop)
    if len(w) == 0:
        raise SignalError("cannot analyse an empty waveform")

    pad, tail = _padding(len(w), frame_size, hop)
    padded = np.concatenate([np.zeros(pad), w.samples, np.zeros(tail)])
    frames = sliding_window_view(padded, frame_size)[::hop] * sine_window(frame_size)
    coefficients = np.fft.rfft(frames, n=frame_size, axis=1)

    return ComplexSpectrogram(
        data=coefficients.T,
        frame_size=frame_size,
        hop=hop,
        length=len(w),
        sample_rate=w.sample_rate,
    )


def istft(s: ComplexSpectrogram, sample_rate: int | None = None) -> Waveform:
    """Weighted overlap-add inverse of :func:`stft`."""
    frame_size, hop = s.frame_size, s.hop
    window = sine_window(frame_size)
    ratio = frame_size // hop
    n_frames = s.n_frames

    frames = np.fft.irfft(s.data.T, n=frame_size, axis=1) * window
    n_blocks = n_frames + ratio - 1
    out = np.zeros((n_blocks, hop))
    wsum = np.zeros((n_blocks, hop))
    frame_blocks = frames.reshape(n_frames, ratio, hop)
    window_blocks = (window**2).reshape(ratio, hop)
    for r in range(ratio):
        out[r : r + n_frames] += frame_blocks[:, r, :]
        wsum[r : r + n_frames] += window_blocks[r]

    out = out.reshape(-1)
    wsum = wsum.reshape(-1)
    covered = wsum > _WSUM_FLOOR
    out[covered] /= wsum[covered]
    out[~covered] = 0.0

    pad = frame_size - hop
    available = out.size - 2 * pad
    length = s.length if s.length is not None else available
    if length > out.size - pad:
        raise SignalError(
            f"spectrogram with {n_frames} frames cannot hold {length} samples"
        )

    rate = sample_rate or s.sample_rate
    if rate is None:
        raise SignalError("sample rate unknown: pass sample_rate or keep it on the spectrogram")
    return Waveform(out[pad : pad + length].copy(), rate)


def read_wav(path: str | Path, expected_sample_rate: int | None = None) -> Waveform:
    """Read a mono WAV file (16-bit PCM or 32-bit float) as float64 samples."""
    try:
        data, sample_rate = sf.read(str(path), dtype="float64", always_2d=True)
    except (sf.SoundFileError, RuntimeError) as e:
        raise SignalError(f"{path}: cannot read audio: {e}") from e
    if data.shape[1] != 1:
        raise SignalError(f"{path}: expected mono audio, found {data.shape[1]} channels")
    if expected_sample_rate is not None and sample_rate != expected_sample_rate:
        raise SignalError(
            f"{path}: sample rate {sample_rate} Hz does not match the expected "
            f"{expected_sample_rate} Hz (resampling is not supported)"
        )
    return Waveform(data[:, 0], sample_rate)


def write_wav(path: str | Path, w: Waveform, subtype: str = "PCM_16") -> Path:
    """Write a mono WAV file; PCM output is clipped to [-1, 1]."""
    if subtype not in WAV_SUBTYPES:
        raise SignalError(f"unsupported WAV subtype {subtype!r}, use one of {WAV_SUBTYPES}")
    samples = w.samples
    if subtype == "PCM_16":
        peak = float(np.max(np.abs(samples)))
        if peak > 1.0:
            logger.warning("clipping %s: peak amplitude %.3f exceeds full scale", path, peak)
            samples = np.clip(samples, -1.0, 1.0)
    else:
        samples = samples.astype(np.float32)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(path), samples, w.sample_rate, subtype=subtype)
    return path
