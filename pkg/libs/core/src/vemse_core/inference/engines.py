"""
Enhancement engines.

``run_vem`` alternates E-(s,n), E-z through the encoder and the NMF M-step.
``run_heuristic`` is the same loop with Sigma_ss dropped from the encoder input.
``run_mcem`` replaces the variational posterior of z with Metropolis-Hastings
samples and updates W, H on the sample-averaged marginal likelihood.

All engines stop when the relative Frobenius change of the expected speech power
V_s drops below ``cfg.tol`` or after ``cfg.max_iters`` iterations. Objective and
quality tracking run outside the timed region.
"""

import logging
import time
from collections.abc import Callable

import numpy as np
from vemse_common.schemas import EngineConfig, Method, ReconMode
from vemse_common.utils.seeding import GAMMA_DRAWS, MH_CHAIN, make_rng

from vemse_core.dsp import ComplexSpectrogram, Waveform, istft
from vemse_core.errors import DimensionMismatchError, InferenceDivergedError
from vemse_core.inference.estep import posterior_sn, posterior_z, posterior_z_heuristic, precision_gamma
from vemse_core.inference.free_energy import free_energy_surrogate, mcem_objective
from vemse_core.inference.reconstruction import reconstruct, wiener_gain
from vemse_core.inference.sampler import latent_log_posterior, run_chain
from vemse_core.inference.state import (
    EnhanceReport,
    EnhanceResult,
    IterationRecord,
    LatentSamples,
    SpeechModel,
    VariationalState,
)
from vemse_core.metrics import si_sdr
from vemse_core.nmf import NmfParams, init_nmf, update_h_from_stats, update_w_from_stats
from vemse_core.nmf import m_step as nmf_m_step

logger = logging.getLogger(__name__)

# Floor for per-iteration timings so reports always carry positive values.
_MIN_ELAPSED_MS = 1e-6


def _check_inputs(x: ComplexSpectrogram, m: SpeechModel) -> None:
    if m.n_freqs != x.n_freqs:
        raise DimensionMismatchError(f"model expects F={m.n_freqs}, mixture has F={x.n_freqs}")


def _check_finite(iteration: int, **arrays: np.ndarray) -> None:
    for name, value in arrays.items():
        if not np.all(np.isfinite(value)):
            raise InferenceDivergedError(iteration, name)


def _relative_change(current: np.ndarray, previous: np.ndarray | None) -> float | None:
    if previous is None:
        return None
    scale = float(np.linalg.norm(previous))
    if scale == 0.0:
        return 0.0 if float(np.linalg.norm(current)) == 0.0 else float("inf")
    return float(np.linalg.norm(current - previous)) / scale


def _tracker(x: ComplexSpectrogram, reference: Waveform | None) -> Callable[[np.ndarray], float] | None:
    if reference is None:
        return None

    def score(speech: np.ndarray) -> float:
        return si_sdr(reference, istft(x.with_data(speech), reference.sample_rate))

    return score


def _config_echo(cfg: EngineConfig, method: Method) -> dict[str, object]:
    echo = cfg.model_dump(mode="json")
    echo["method"] = method.value
    return echo


def _finish(report: EnhanceReport, cfg: EngineConfig) -> None:
    if report.iterations:
        report.final_si_sdr_db = report.iterations[-1].si_sdr_db
    last = report.iterations[-1] if report.iterations else None
    logger.info(
        "%s %s after %d iterations (objective %.6g)",
        report.method.value,
        "converged" if report.converged else f"stopped at max_iters={cfg.max_iters}",
        report.iterations_used,
        last.free_energy if last else float("nan"),
    )


def run_vem(
    x: ComplexSpectrogram,
    m: SpeechModel,
    cfg: EngineConfig,
    reference: Waveform | None = None,
    heuristic: bool = False,
) -> EnhanceResult:
    """
    Variational EM enhancement of the mixture ``x``.

    With ``reference`` given, every iteration records the SI-SDR of the
    ``cfg.track_mode`` reconstruction.
    """
    _check_inputs(x, m)
    method = Method.HEURISTIC if heuristic else Method.VEM
    F, N = x.data.shape
    nmf = init_nmf(F, cfg.K, N, cfg.seed)
    r_z = m.encode(x.power)
    report = EnhanceReport(method=method, config=_config_echo(cfg, method))
    score = _tracker(x, reference)

    state: VariationalState | None = None
    previous: np.ndarray | None = None
    for it in range(1, cfg.max_iters + 1):
        start = time.perf_counter()
        gamma2 = precision_gamma(m, r_z.mean, r_z.variance, cfg.D, make_rng(cfg.seed, GAMMA_DRAWS, it))
        _check_finite(it, gamma2=gamma2)
        post = posterior_sn(x.data, gamma2, nmf.variance())
        r_z = posterior_z_heuristic(m, post.mu_s) if heuristic else posterior_z(m, post.mu_s, post.sigma_ss)
        nmf = nmf_m_step(nmf, post.noise_power)
        elapsed_ms = max((time.perf_counter() - start) * 1000.0, _MIN_ELAPSED_MS)

        _check_finite(it, mu_s=post.mu_s, z_mean=r_z.mean, W=nmf.W, H=nmf.H)
        state = VariationalState.from_parts(post, r_z, gamma2)
        speech_power = state.speech_power
        rel = _relative_change(speech_power, previous)
        previous = speech_power

        objective = free_energy_surrogate(x, state, nmf, m, cfg.D, cfg.seed)
        sdr = None
        if score is not None:
            sdr = score(reconstruct(x, state, nmf, m, cfg.track_mode, cfg).data)
        report.iterations.append(IterationRecord(it, objective, elapsed_ms, rel, sdr))
        logger.debug("%s it=%d objective=%.6g rel=%s ms=%.2f", method.value, it, objective, rel, elapsed_ms)

        if rel is not None and rel < cfg.tol:
            report.converged = True
            break

    _finish(report, cfg)
    return EnhanceResult(method=method, nmf=nmf, report=report, state=state)


def run_heuristic(
    x: ComplexSpectrogram, m: SpeechModel, cfg: EngineConfig, reference: Waveform | None = None
) -> EnhanceResult:
    return run_vem(x, m, cfg, reference=reference, heuristic=True)


def _mcem_m_step(nmf: NmfParams, x_power: np.ndarray, speech_vars: list[np.ndarray]) -> NmfParams:
    """Multiplicative H then W update on mean_d log N_c(x; 0, sigma_d^2 + WH)."""

    def stats(p: NmfParams) -> tuple[np.ndarray, np.ndarray]:
        WH = p.variance()
        inv = [1.0 / (v + WH) for v in speech_vars]
        return x_power * np.mean([i**2 for i in inv], axis=0), np.mean(inv, axis=0)

    nmf = update_h_from_stats(nmf, *stats(nmf))
    return update_w_from_stats(nmf, *stats(nmf))


def run_mcem(
    x: ComplexSpectrogram, m: SpeechModel, cfg: EngineConfig, reference: Waveform | None = None
) -> EnhanceResult:
    """
    Monte Carlo EM baseline.

    Each iteration draws ``4 * cfg.D`` Metropolis-Hastings samples per frame and
    keeps the last ``cfg.D``; the chain resumes from the previous iteration's
    last sample. Quality tracking reconstructs with MH-Wiener when
    ``cfg.track_mode`` is ``mh`` and uses the mean E-step gain otherwise.
    """
    _check_inputs(x, m)
    F, N = x.data.shape
    R = cfg.D
    x_power = x.power
    nmf = init_nmf(F, cfg.K, N, cfg.seed)
    z = m.encode(x_power).mean
    report = EnhanceReport(method=Method.MCEM, config=_config_echo(cfg, Method.MCEM))
    score = _tracker(x, reference)

    samples: LatentSamples | None = None
    previous: np.ndarray | None = None
    for it in range(1, cfg.max_iters + 1):
        start = time.perf_counter()
        noise_var = nmf.variance()
        chain = run_chain(
            z,
            latent_log_posterior(m, x_power, noise_var),
            eps2=cfg.mh.eps2,
            n_steps=cfg.mcem_draws,
            keep_last=R,
            seed=cfg.seed,
            keys=(MH_CHAIN, it),
        )
        z = chain.last
        speech_vars = [m.decode(zs) for zs in chain.samples]
        gains = [wiener_gain(v, noise_var) for v in speech_vars]
        mu_s = np.mean(gains, axis=0) * x.data
        speech_power = np.mean(
            [g**2 * x_power + v * noise_var / (v + noise_var) for g, v in zip(gains, speech_vars, strict=True)],
            axis=0,
        )
        nmf = _mcem_m_step(nmf, x_power, speech_vars)
        elapsed_ms = max((time.perf_counter() - start) * 1000.0, _MIN_ELAPSED_MS)

        _check_finite(it, z=z, mu_s=mu_s, W=nmf.W, H=nmf.H)
        samples = LatentSamples(samples=chain.samples, mu_s=mu_s)
        rel = _relative_change(speech_power, previous)
        previous = speech_power

        objective = mcem_objective(x_power, speech_vars, nmf)
        sdr = None
        if score is not None:
            tracked = mu_s
            if cfg.track_mode is ReconMode.MH:
                tracked = reconstruct(x, samples, nmf, m, ReconMode.MH, cfg).data
            sdr = score(tracked)
        report.iterations.append(IterationRecord(it, objective, elapsed_ms, rel, sdr))
        logger.debug(
            "mcem it=%d objective=%.6g rel=%s ms=%.2f acceptance=%.3f",
            it,
            objective,
            rel,
            elapsed_ms,
            float(np.mean(chain.acceptance_rate)),
        )

        if rel is not None and rel < cfg.tol:
            report.converged = True
            break

    _finish(report, cfg)
    return EnhanceResult(method=Method.MCEM, nmf=nmf, report=report, samples=samples)


def enhance(
    x: ComplexSpectrogram, m: SpeechModel, cfg: EngineConfig, reference: Waveform | None = None
) -> EnhanceResult:
    """Run the engine selected by ``cfg.method``."""
    if cfg.method is Method.MCEM:
        return run_mcem(x, m, cfg, reference)
    return run_vem(x, m, cfg, reference, heuristic=cfg.method is Method.HEURISTIC)
