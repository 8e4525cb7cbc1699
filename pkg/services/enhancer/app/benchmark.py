"""
The ``benchmark`` command.

Every (utterance, method, sample count) pair is one job: the engine runs once and
its posterior is reconstructed in each requested mode. Jobs are independent and
may run in worker processes; rows are sorted before they are written.

Outputs in ``cfg.out``:

* ``results.csv``: one row per (method, D, mode, utterance). It holds no wall-clock
  values, so a rerun with the same seed reproduces it byte for byte.
* ``timings.csv``: iterations and mean milliseconds per iteration of every job.
* ``convergence.csv``: SI-SDR traces averaged over utterances, against the
  iteration index and against the mean cumulative wall time.
* ``summary.json``: medians, 95% confidence intervals, method orderings, the
  MCEM:VEM per-iteration time ratio, the cost decrease factor and the host.
"""

import csv
import logging
import statistics
from collections import defaultdict
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache, partial
from pathlib import Path
from typing import Any

import numpy as np
from scipy import stats
from vemse_common.observability import host_snapshot, write_json
from vemse_common.schemas import Method, ReconMode
from vemse_core import model_store
from vemse_core.dsp import istft, stft
from vemse_core.inference import enhance, reconstruct
from vemse_core.metrics import (
    IterationSummary,
    cost_decrease_factor,
    pad_traces,
    si_sdr,
    time_iterations,
)
from vemse_core.vae import ToyMixture, VaeModel, make_toy_mixtures

from app.config import BenchmarkRunConfig

logger = logging.getLogger(__name__)

RESULTS_CSV = "results.csv"
TIMINGS_CSV = "timings.csv"
CONVERGENCE_CSV = "convergence.csv"
SUMMARY_JSON = "summary.json"

RESULT_COLUMNS = ("method", "D", "mode", "utterance", "si_sdr", "iters", "iters_to_tol")
TIMING_COLUMNS = ("method", "D", "utterance", "iters", "ms_per_iter")
CONVERGENCE_COLUMNS = ("method", "D", "iteration", "mean_si_sdr", "time_ms")


@dataclass(frozen=True)
class BenchmarkJob:
    utterance: int
    method: Method
    count: int


@dataclass(frozen=True)
class ResultRow:
    method: Method
    D: int
    mode: ReconMode
    utterance: int
    si_sdr: float
    iters: int
    ms_per_iter: float
    iters_to_tol: int | None

    @property
    def sort_key(self) -> tuple[str, int, str, int]:
        return (self.method.value, self.D, self.mode.value, self.utterance)

    def as_csv(self) -> dict[str, str]:
        return {
            "method": self.method.value,
            "D": str(self.D),
            "mode": self.mode.value,
            "utterance": str(self.utterance),
            "si_sdr": f"{self.si_sdr:.6f}",
            "iters": str(self.iters),
            "iters_to_tol": "" if self.iters_to_tol is None else str(self.iters_to_tol),
        }


@dataclass(frozen=True)
class JobResult:
    job: BenchmarkJob
    rows: list[ResultRow]
    timing: IterationSummary
    input_si_sdr: float
    trace: list[float] | None


@lru_cache(maxsize=4)
def _model(path: Path) -> VaeModel:
    return model_store.load(path)


@lru_cache(maxsize=4)
def _mixtures(seed: int, n: int, snr_db: float) -> list[ToyMixture]:
    return make_toy_mixtures(seed, n, snr_db)


def plan_jobs(cfg: BenchmarkRunConfig) -> list[BenchmarkJob]:
    return [
        BenchmarkJob(utterance=i, method=method, count=count)
        for method in sorted(set(cfg.methods), key=lambda m: m.value)
        if cfg.modes_for(method)
        for count in cfg.sample_counts(method)
        for i in range(cfg.n_utterances)
    ]


def run_job(cfg: BenchmarkRunConfig, job: BenchmarkJob) -> JobResult:
    model = _model(cfg.model)
    mixture = _mixtures(cfg.seed, cfg.n_utterances, cfg.snr)[job.utterance]
    engine_cfg = cfg.engine(job.method, cfg.seed, D=job.count)

    x = stft(mixture.mixture, cfg.frame_size, cfg.hop)
    result = enhance(x, model, engine_cfg, mixture.speech if cfg.track_sdr else None)
    timing = time_iterations(result.report)

    rows = []
    for mode in cfg.modes_for(job.method):
        estimate = istft(reconstruct(x, result.posterior, result.nmf, model, mode, engine_cfg))
        rows.append(
            ResultRow(
                method=job.method,
                D=job.count,
                mode=mode,
                utterance=job.utterance,
                si_sdr=si_sdr(mixture.speech, estimate),
                iters=timing.iterations,
                ms_per_iter=timing.mean_ms_per_iter,
                iters_to_tol=timing.iters_to_tolerance,
            )
        )
    logger.debug("job %s done: %s", job, [f"{r.mode.value}={r.si_sdr:.2f}" for r in rows])
    return JobResult(
        job=job,
        rows=rows,
        timing=timing,
        input_si_sdr=si_sdr(mixture.speech, mixture.mixture),
        trace=result.report.sdr_trace,
    )


def run_jobs(cfg: BenchmarkRunConfig, jobs: Sequence[BenchmarkJob]) -> list[JobResult]:
    work = partial(run_job, cfg)
    if cfg.workers == 1:
        return [work(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(work, jobs))


def confidence_interval(values: Sequence[float], level: float = 0.95) -> tuple[float, float] | None:
    """Student-t interval for the mean; None with fewer than two values."""
    if len(values) < 2:
        return None
    mean = float(np.mean(values))
    sem = float(stats.sem(values))
    if sem == 0.0:
        return mean, mean
    low, high = stats.t.interval(level, len(values) - 1, loc=mean, scale=sem)
    return float(low), float(high)


def _median(values: Iterable[float | int | None]) -> float | None:
    present = [float(v) for v in values if v is not None]
    return statistics.median(present) if present else None


def summarize(cfg: BenchmarkRunConfig, results: Sequence[JobResult]) -> dict[str, Any]:
    input_sdr = {r.job.utterance: r.input_si_sdr for r in results}
    groups: dict[tuple[str, int, str], list[ResultRow]] = defaultdict(list)
    for result in results:
        for row in result.rows:
            groups[(row.method.value, row.D, row.mode.value)].append(row)

    group_summaries = []
    for (method, D, mode), rows in sorted(groups.items()):
        sdrs = [r.si_sdr for r in rows]
        group_summaries.append(
            {
                "method": method,
                "D": D,
                "mode": mode,
                "n": len(rows),
                "median_si_sdr": statistics.median(sdrs),
                "mean_si_sdr": float(np.mean(sdrs)),
                "ci95_si_sdr": confidence_interval(sdrs),
                "median_improvement_db": statistics.median(r.si_sdr - input_sdr[r.utterance] for r in rows),
                "median_iters": _median(r.iters for r in rows),
                "median_ms_per_iter": _median(r.ms_per_iter for r in rows),
                "median_iters_to_tol": _median(r.iters_to_tol for r in rows),
            }
        )

    medians = {(g["method"], g["D"], g["mode"]): g["median_si_sdr"] for g in group_summaries}
    orderings = [
        {
            "D": D,
            "mode": mode,
            "vem": medians[(Method.VEM.value, D, mode)],
            "heuristic": medians[(Method.HEURISTIC.value, D, mode)],
            "vem_ge_heuristic": medians[(Method.VEM.value, D, mode)] >= medians[(Method.HEURISTIC.value, D, mode)],
        }
        for (method, D, mode) in sorted(medians)
        if method == Method.VEM.value and (Method.HEURISTIC.value, D, mode) in medians
    ]

    return {
        "n_utterances": cfg.n_utterances,
        "snr_db": cfg.snr,
        "median_input_si_sdr": statistics.median(input_sdr.values()) if input_sdr else None,
        "groups": group_summaries,
        "orderings": orderings,
        "mcem_vs_vem": _cost_comparison(results),
        "config": cfg.model_dump(mode="json"),
        "host": host_snapshot(),
    }


def _cost_comparison(results: Sequence[JobResult]) -> list[dict[str, Any]]:
    """Per-iteration time ratio and cost decrease factor of each MCEM R against VEM at its smallest D."""
    by_key: dict[tuple[Method, int], dict[int, JobResult]] = defaultdict(dict)
    for r in results:
        by_key[(r.job.method, r.job.count)][r.job.utterance] = r
    vem_counts = sorted(count for method, count in by_key if method is Method.VEM)
    if not vem_counts:
        return []
    vem = by_key[(Method.VEM, vem_counts[0])]

    comparisons = []
    for (method, R), mcem in sorted(by_key.items(), key=lambda kv: (kv[0][0].value, kv[0][1])):
        if method is not Method.MCEM:
            continue
        shared = sorted(set(vem) & set(mcem))
        if not shared:
            continue
        mcem_ms = float(np.mean([mcem[u].timing.mean_ms_per_iter for u in shared]))
        vem_ms = float(np.mean([vem[u].timing.mean_ms_per_iter for u in shared]))
        factors = [cost_decrease_factor(vem[u].timing, mcem[u].timing) for u in shared]
        comparisons.append(
            {
                "R": R,
                "vem_D": vem_counts[0],
                "mcem_ms_per_iter": mcem_ms,
                "vem_ms_per_iter": vem_ms,
                "time_ratio": mcem_ms / vem_ms,
                "median_cost_decrease_factor": _median(factors),
            }
        )
    return comparisons


def timing_rows(results: Sequence[JobResult]) -> list[dict[str, str]]:
    ordered = sorted(results, key=lambda r: (r.job.method.value, r.job.count, r.job.utterance))
    return [
        {
            "method": r.job.method.value,
            "D": str(r.job.count),
            "utterance": str(r.job.utterance),
            "iters": str(r.timing.iterations),
            "ms_per_iter": f"{r.timing.mean_ms_per_iter:.6f}",
        }
        for r in ordered
    ]


def convergence_rows(results: Sequence[JobResult]) -> list[dict[str, str]]:
    by_key: dict[tuple[str, int], list[JobResult]] = defaultdict(list)
    for r in results:
        if r.trace:
            by_key[(r.job.method.value, r.job.count)].append(r)

    rows = []
    for (method, count), group in sorted(by_key.items()):
        mean_trace = pad_traces([r.trace for r in group if r.trace]).mean(axis=0)
        ms = float(np.mean([r.timing.mean_ms_per_iter for r in group]))
        for i, value in enumerate(mean_trace, start=1):
            rows.append(
                {
                    "method": method,
                    "D": str(count),
                    "iteration": str(i),
                    "mean_si_sdr": f"{value:.6f}",
                    "time_ms": f"{i * ms:.6f}",
                }
            )
    return rows


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict[str, str]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return path


@dataclass(frozen=True)
class BenchmarkOutcome:
    results_path: Path
    timings_path: Path
    convergence_path: Path
    summary_path: Path
    rows: list[ResultRow]
    summary: dict[str, Any]


def cmd_benchmark(cfg: BenchmarkRunConfig) -> BenchmarkOutcome:
    jobs = plan_jobs(cfg)
    logger.info("benchmark: %d jobs on %d utterances with %d worker(s)", len(jobs), cfg.n_utterances, cfg.workers)
    results = run_jobs(cfg, jobs)

    rows = sorted((row for r in results for row in r.rows), key=lambda row: row.sort_key)
    results_path = _write_csv(cfg.out / RESULTS_CSV, RESULT_COLUMNS, (row.as_csv() for row in rows))
    timings_path = _write_csv(cfg.out / TIMINGS_CSV, TIMING_COLUMNS, timing_rows(results))
    convergence_path = _write_csv(cfg.out / CONVERGENCE_CSV, CONVERGENCE_COLUMNS, convergence_rows(results))
    summary = summarize(cfg, results)
    summary_path = write_json(cfg.out / SUMMARY_JSON, summary)

    for comparison in summary["mcem_vs_vem"]:
        logger.info(
            "MCEM(R=%d) / VEM(D=%d) per-iteration time ratio: %.1f",
            comparison["R"],
            comparison["vem_D"],
            comparison["time_ratio"],
        )
    return BenchmarkOutcome(results_path, timings_path, convergence_path, summary_path, rows, summary)
