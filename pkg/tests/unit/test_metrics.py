"""Unit tests for SI-SDR, SNR mixing and iteration timing summaries."""

import numpy as np
import pytest
from vemse_common.observability import read_jsonl
from vemse_common.schemas import Method
from vemse_core.dsp import Waveform
from vemse_core.errors import DimensionMismatchError, DomainError
from vemse_core.inference import EnhanceReport, IterationRecord
from vemse_core.metrics import (
    IterationSummary,
    cost_decrease_factor,
    iters_to_tolerance,
    mix_at_snr,
    pad_traces,
    sdr_improvement,
    si_sdr,
    time_iterations,
    write_report_jsonl,
)
from vemse_test_utils import random_waveform


def _report(traces: list[float | None], ms: float = 2.0) -> EnhanceReport:
    report = EnhanceReport(method=Method.VEM, config={"K": 10})
    for i, value in enumerate(traces, start=1):
        report.iterations.append(IterationRecord(iteration=i, free_energy=-float(i), elapsed_ms=ms, si_sdr_db=value))
    return report


class TestSiSdr:
    """Scale-invariant SDR."""

    def test_identical_is_capped(self):
        """An exact estimate hits the 100 dB cap."""
        x = random_waveform(0, 1000)
        assert si_sdr(x, x) == 100.0, "identical signals should give the cap"

    def test_scale_invariance(self):
        """Scaling the estimate changes nothing."""
        r = random_waveform(1, 2000)
        e = Waveform(r.samples + 0.3 * random_waveform(2, 2000).samples, 16000)
        scaled = Waveform(3.5 * e.samples, 16000)
        assert si_sdr(r, scaled) == pytest.approx(si_sdr(r, e), abs=1e-9)

    def test_orthogonal_residual_ten_db(self):
        """A residual orthogonal to the reference with 1/10 of its energy gives 10 dB."""
        n = np.arange(1000)
        r = np.sin(2 * np.pi * 5 * n / 1000)
        q = np.cos(2 * np.pi * 5 * n / 1000)
        e = r + np.sqrt(0.1) * q
        assert si_sdr(r, e) == pytest.approx(10.0, abs=1e-9)

    def test_orthogonal_estimate_is_floor(self):
        """An estimate with no projection on the reference gives -100 dB."""
        n = np.arange(1000)
        assert si_sdr(np.sin(2 * np.pi * 5 * n / 1000), np.cos(2 * np.pi * 5 * n / 1000)) == pytest.approx(
            -100.0
        )

    def test_zero_reference(self):
        """A silent reference is a domain error."""
        with pytest.raises(DomainError):
            si_sdr(np.zeros(10), np.ones(10))

    def test_length_mismatch(self):
        """Lengths must agree."""
        with pytest.raises(DimensionMismatchError):
            si_sdr(np.ones(10), np.ones(11))

    def test_improvement(self):
        """Improvement is output SDR minus input SDR."""
        r = random_waveform(3, 1000)
        noise = random_waveform(4, 1000)
        mixture = Waveform(r.samples + noise.samples, 16000)
        result = sdr_improvement(r, r, mixture)
        assert result.improvement_db == pytest.approx(100.0 - si_sdr(r, mixture))


class TestMixAtSnr:
    """Noise scaling."""

    @pytest.mark.parametrize("snr_db", [-5.0, 0.0, 5.0])
    def test_achieves_requested_snr(self, snr_db):
        """The scaled noise gives the requested energy ratio."""
        s, n = random_waveform(5, 4000), random_waveform(6, 4000)
        mixture, scaled = mix_at_snr(s, n, snr_db)
        assert 10 * np.log10(s.energy / scaled.energy) == pytest.approx(snr_db, abs=1e-9)
        np.testing.assert_allclose(mixture.samples, s.samples + scaled.samples, atol=1e-15)

    def test_silent_noise_rejected(self):
        """Noise without energy cannot be scaled."""
        with pytest.raises(DomainError):
            mix_at_snr(random_waveform(5, 100), Waveform(np.zeros(100), 16000), 0.0)

    def test_length_mismatch(self):
        """Speech and noise must have equal length."""
        with pytest.raises(DimensionMismatchError):
            mix_at_snr(random_waveform(5, 100), random_waveform(6, 101), 0.0)


class TestTiming:
    """Iterations-to-tolerance and cost factors."""

    def test_iters_to_tolerance(self):
        """[0, 5, 9.6, 10, 10] reaches within 0.5 dB of the final value at iteration 3."""
        assert iters_to_tolerance([0.0, 5.0, 9.6, 10.0, 10.0]) == 3

    def test_constant_trace(self):
        """A constant trace is converged from the first iteration."""
        assert iters_to_tolerance([4.0, 4.0, 4.0]) == 1

    def test_empty_trace(self):
        """An empty trace is rejected."""
        with pytest.raises(DomainError):
            iters_to_tolerance([])

    def test_time_iterations(self):
        """Mean per-iteration time and iterations to tolerance come from the report."""
        summary = time_iterations(_report([0.0, 5.0, 9.6, 10.0, 10.0], ms=2.0))
        assert summary == IterationSummary(iterations=5, mean_ms_per_iter=2.0, iters_to_tolerance=3)
        assert summary.cost_to_tolerance_ms == pytest.approx(6.0)

    def test_untracked_report(self):
        """Without SDR tracking only timing is summarized."""
        summary = time_iterations(_report([None, None]))
        assert summary.iters_to_tolerance is None and summary.cost_to_tolerance_ms is None

    def test_cost_decrease_factor(self):
        """The factor is the slow method's time-to-tolerance over the fast one's."""
        fast = IterationSummary(iterations=10, mean_ms_per_iter=1.0, iters_to_tolerance=4)
        slow = IterationSummary(iterations=10, mean_ms_per_iter=3.0, iters_to_tolerance=8)
        assert cost_decrease_factor(fast, slow) == pytest.approx(6.0)
        untracked = IterationSummary(iterations=3, mean_ms_per_iter=1.0, iters_to_tolerance=None)
        assert cost_decrease_factor(untracked, slow) is None

    def test_pad_traces(self):
        """Shorter traces are padded with their final value."""
        np.testing.assert_array_equal(pad_traces([[1.0, 2.0, 3.0], [5.0]]), [[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]])
        with pytest.raises(DomainError):
            pad_traces([[1.0], []])


class TestReportJsonl:
    """Report persistence."""

    def test_one_line_per_iteration_plus_summary(self, tmp_path):
        """Iteration records come first, then a summary with the method and config."""
        path = write_report_jsonl(_report([1.0, 2.0]), tmp_path / "report.jsonl")
        records = read_jsonl(path)
        assert [r["type"] for r in records] == ["iteration", "iteration", "summary"]
        assert records[-1]["method"] == "vem", "enum values are written as strings"
        assert records[-1]["config"] == {"K": 10}
        assert records[0]["si_sdr_db"] == 1.0
