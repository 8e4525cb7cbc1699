"""
Enhancement quality and runtime measurement.

Quality is the scale-invariant SDR: the estimate is projected onto the
reference and the energy of the projection is compared with the residual.
"""

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol

import numpy as np
from vemse_common.observability.records import write_jsonl

from vemse_core.dsp import Waveform
from vemse_core.errors import DimensionMismatchError, DomainError

SDR_CAP_DB = 100.0
SDR_TOLERANCE_DB = 0.5


@dataclass(frozen=True)
class SdrResult:
    si_sdr_db: float
    input_si_sdr_db: float

    @property
    def improvement_db(self) -> float:
        return self.si_sdr_db - self.input_si_sdr_db


def _samples(x: Waveform | np.ndarray) -> np.ndarray:
    return x.samples if isinstance(x, Waveform) else np.asarray(x, dtype=np.float64)


def si_sdr(reference: Waveform | np.ndarray, estimate: Waveform | np.ndarray) -> float:
    """Scale-invariant SDR in dB, clipped to +/-100 dB."""
    r = _samples(reference)
    e = _samples(estimate)
    if r.shape != e.shape:
        raise DimensionMismatchError(f"reference {r.shape} and estimate {e.shape} differ in length")
    ref_energy = float(np.dot(r, r))
    if ref_energy <= 0:
        raise DomainError("reference has zero energy")

    alpha = float(np.dot(e, r)) / ref_energy
    target = alpha * r
    residual = e - target
    target_energy = float(np.dot(target, target))
    residual_energy = float(np.dot(residual, residual))
    if residual_energy == 0.0:
        return SDR_CAP_DB
    if target_energy == 0.0:
        return -SDR_CAP_DB
    value = 10.0 * np.log10(target_energy / residual_energy)
    return float(np.clip(value, -SDR_CAP_DB, SDR_CAP_DB))


def sdr_improvement(reference: Waveform, estimate: Waveform, mixture: Waveform) -> SdrResult:
    return SdrResult(si_sdr_db=si_sdr(reference, estimate), input_si_sdr_db=si_sdr(reference, mixture))


def mix_at_snr(speech: Waveform, noise: Waveform, snr_db: float) -> tuple[Waveform, Waveform]:
    """Scale ``noise`` so that 10 log10(P_speech / P_noise) == snr_db and add it to ``speech``."""
    if len(speech) != len(noise):
        raise DimensionMismatchError(f"speech ({len(speech)}) and noise ({len(noise)}) lengths differ")
    if speech.sample_rate != noise.sample_rate:
        raise DimensionMismatchError(
            f"speech ({speech.sample_rate} Hz) and noise ({noise.sample_rate} Hz) sample rates differ"
        )
    p_speech = speech.energy
    p_noise = noise.energy
    if p_speech <= 0 or p_noise <= 0:
        raise DomainError("speech and noise must both have nonzero energy")

    gain = np.sqrt(p_speech / (p_noise * 10.0 ** (snr_db / 10.0)))
    scaled = Waveform(gain * noise.samples, noise.sample_rate)
    return Waveform(speech.samples + scaled.samples, speech.sample_rate), scaled


class IterationRecordLike(Protocol):
    elapsed_ms: float
    si_sdr_db: float | None


class ReportLike(Protocol):
    @property
    def iterations(self) -> Sequence[IterationRecordLike]: ...

    def to_records(self) -> Iterable[Mapping[str, Any]]: ...


@dataclass(frozen=True)
class IterationSummary:
    iterations: int
    mean_ms_per_iter: float
    iters_to_tolerance: int | None

    @property
    def cost_to_tolerance_ms(self) -> float | None:
        if self.iters_to_tolerance is None:
            return None
        return self.iters_to_tolerance * self.mean_ms_per_iter


def iters_to_tolerance(trace: Sequence[float], tol_db: float = SDR_TOLERANCE_DB) -> int:
    """1-based index of the first value within ``tol_db`` of the final value."""
    if not trace:
        raise DomainError("empty SDR trace")
    final = trace[-1]
    for i, value in enumerate(trace, start=1):
        if abs(value - final) <= tol_db:
            return i
    return len(trace)


def time_iterations(report: ReportLike, tol_db: float = SDR_TOLERANCE_DB) -> IterationSummary:
    records = list(report.iterations)
    if not records:
        raise DomainError("report has no iterations")
    mean_ms = float(np.mean([r.elapsed_ms for r in records]))
    trace = [r.si_sdr_db for r in records]
    to_tol = None
    if all(v is not None for v in trace):
        to_tol = iters_to_tolerance([float(v) for v in trace if v is not None], tol_db)
    return IterationSummary(iterations=len(records), mean_ms_per_iter=mean_ms, iters_to_tolerance=to_tol)


def cost_decrease_factor(fast: IterationSummary, slow: IterationSummary) -> float | None:
    """Ratio of the time ``slow`` needs to reach its final SDR to the time ``fast`` needs."""
    if fast.cost_to_tolerance_ms is None or slow.cost_to_tolerance_ms is None:
        return None
    return slow.cost_to_tolerance_ms / fast.cost_to_tolerance_ms


def pad_traces(traces: Sequence[Sequence[float]]) -> np.ndarray:
    """Stack traces into a matrix, padding each with its last value to the longest length."""
    if not traces or any(len(t) == 0 for t in traces):
        raise DomainError("traces must be non-empty")
    length = max(len(t) for t in traces)
    return np.array([list(t) + [t[-1]] * (length - len(t)) for t in traces], dtype=np.float64)


def write_report_jsonl(report: ReportLike, path: str | Path) -> Path:
    """One JSON object per iteration, then a final summary object."""
    return write_jsonl(path, report.to_records())
