"""The ``train``, ``enhance`` and ``eval`` commands."""

import logging
from dataclasses import dataclass
from pathlib import Path

from vemse_common.observability import JsonlWriter
from vemse_core import model_store
from vemse_core.dsp import Waveform, istft, read_wav, stft, write_wav
from vemse_core.inference import EnhanceReport, enhance, reconstruct
from vemse_core.metrics import SdrResult, mix_at_snr, sdr_improvement, si_sdr, write_report_jsonl
from vemse_core.vae import (
    dataset_checksum,
    fit_input_normalization,
    init_model,
    make_toy_dataset,
    power_frames,
    train,
)

from app.config import EnhanceRunConfig, EvalRunConfig, TrainRunConfig

logger = logging.getLogger(__name__)

TRAIN_LOG = "train_log.jsonl"
ENHANCED_WAV = "enhanced.wav"
REPORT = "report.jsonl"


@dataclass(frozen=True)
class TrainOutcome:
    model_path: Path
    log_path: Path
    best_epoch: int
    best_val_loss: float
    epochs: int


def cmd_train(cfg: TrainRunConfig) -> TrainOutcome:
    waveforms = make_toy_dataset(cfg.seed, cfg.n_utterances)
    frames = power_frames(waveforms, cfg.frame_size, cfg.hop)
    model = fit_input_normalization(init_model(cfg.stft.n_freqs, cfg.latent_dim, cfg.hidden, cfg.seed), frames)
    log_path = cfg.out / TRAIN_LOG

    with JsonlWriter(log_path) as log:
        log.write(
            {
                "type": "dataset",
                "n_utterances": cfg.n_utterances,
                "n_frames": frames.shape[1],
                "checksum": dataset_checksum(waveforms),
            }
        )
        result = train(
            model, frames, cfg.train_config, on_epoch=lambda r: log.write({"type": "epoch", **r.as_record()})
        )
        best = min(result.history, key=lambda r: r.val_loss)
        model_path = model_store.save(result.model, cfg.model_path)
        log.write(
            {
                "type": "summary",
                "best_epoch": best.epoch,
                "best_val_loss": best.val_loss,
                "epochs": len(result.history),
                "model": model_path,
                "config": cfg.model_dump(mode="json"),
            }
        )

    logger.info("best epoch %d (validation loss %.4f); model written to %s", best.epoch, best.val_loss, model_path)
    return TrainOutcome(
        model_path=model_path,
        log_path=log_path,
        best_epoch=best.epoch,
        best_val_loss=best.val_loss,
        epochs=len(result.history),
    )


@dataclass(frozen=True)
class EnhanceOutcome:
    wav_path: Path
    report_path: Path
    report: EnhanceReport
    sdr: SdrResult | None


def _load_mixture(cfg: EnhanceRunConfig) -> tuple[Waveform, Waveform | None]:
    if cfg.input is not None:
        return read_wav(cfg.input), None
    assert cfg.speech is not None and cfg.noise is not None  # nosec B101 - guaranteed by EnhanceRunConfig
    speech = read_wav(cfg.speech)
    noise = read_wav(cfg.noise, expected_sample_rate=speech.sample_rate)
    mixture, _ = mix_at_snr(speech, noise, cfg.snr)
    return mixture, speech


def cmd_enhance(cfg: EnhanceRunConfig) -> EnhanceOutcome:
    model = model_store.load(cfg.model)
    mixture, reference = _load_mixture(cfg)
    engine_cfg = cfg.engine_config

    x = stft(mixture, cfg.frame_size, cfg.hop)
    result = enhance(x, model, engine_cfg, reference)
    estimate = istft(reconstruct(x, result.posterior, result.nmf, model, cfg.recon, engine_cfg))

    sdr = None
    if reference is not None:
        sdr = sdr_improvement(reference, estimate, mixture)
        result.report.final_si_sdr_db = sdr.si_sdr_db
        logger.info(
            "SI-SDR %.2f dB (mixture %.2f dB, improvement %.2f dB)",
            sdr.si_sdr_db,
            sdr.input_si_sdr_db,
            sdr.improvement_db,
        )

    wav_path = write_wav(cfg.out / ENHANCED_WAV, estimate, subtype="FLOAT")
    report_path = write_report_jsonl(result.report, cfg.out / REPORT)
    logger.info("enhanced %s with %s/%s -> %s", cfg.input or cfg.speech, cfg.method.value, cfg.recon.value, wav_path)
    return EnhanceOutcome(wav_path=wav_path, report_path=report_path, report=result.report, sdr=sdr)


def cmd_eval(cfg: EvalRunConfig) -> float:
    reference = read_wav(cfg.reference)
    estimate = read_wav(cfg.estimate, expected_sample_rate=reference.sample_rate)
    return si_sdr(reference, estimate)
