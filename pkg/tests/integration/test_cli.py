"""
End-to-end runs of the command line with tiny settings.

A toy model is trained once per module on a 64-sample STFT; enhancement,
evaluation and the benchmark reuse it.
"""

import csv
import json

import numpy as np
import pytest
from app.main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, main
from vemse_common.observability import read_jsonl
from vemse_core import model_store
from vemse_core.dsp import Waveform, read_wav, write_wav
from vemse_core.vae import make_stationary_noise, make_toy_dataset

TINY_STFT = ["--frame-size", "64", "--hop", "16"]
TINY_ENGINE = ["--K", "2", "--max-iters", "3", "--mh-iters", "4", "--mh-keep", "2"]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    cfg = out / "train.cfg"
    cfg.write_text("hidden = 8\nlatent_dim = 2\n", encoding="utf-8")
    status = main(
        ["train", "--config", str(cfg), "--out", str(out), "--n-utterances", "2", "--max-epochs", "2", "--batch", "64"]
        + TINY_STFT
    )
    assert status == EXIT_OK, "training should succeed"
    return out


@pytest.fixture(scope="module")
def wavs(tmp_path_factory):
    out = tmp_path_factory.mktemp("wavs")
    speech = make_toy_dataset(7, 1, split=1)[0]
    noise = make_stationary_noise(7, len(speech), stream=3)
    return (
        write_wav(out / "speech.wav", speech, subtype="FLOAT"),
        write_wav(out / "noise.wav", noise, subtype="FLOAT"),
    )


class TestTrain:
    """train."""

    def test_writes_model_and_log(self, trained):
        """The model loads back and the log has dataset, epoch and summary records."""
        model = model_store.load(trained / "model.vaew")
        assert (model.n_freqs, model.latent_dim, model.hidden) == (33, 2, 8)
        records = read_jsonl(trained / "train_log.jsonl")
        assert records[0]["type"] == "dataset" and len(records[0]["checksum"]) == 64
        assert [r["type"] for r in records[1:-1]] == ["epoch", "epoch"]
        assert records[-1]["type"] == "summary" and records[-1]["epochs"] == 2

    def test_best_epoch_not_worse_than_first(self, trained):
        """The logged validation loss at the best epoch is at most the epoch-1 loss."""
        records = read_jsonl(trained / "train_log.jsonl")
        epochs = {r["epoch"]: r for r in records if r["type"] == "epoch"}
        summary = records[-1]
        best = epochs[summary["best_epoch"]]
        assert best["val_loss"] == summary["best_val_loss"]
        assert best["val_loss"] <= epochs[1]["val_loss"]

    def test_same_seed_same_model_bytes(self, tmp_path):
        """Two trainings with one seed write byte-identical model files."""
        cfg = tmp_path / "train.cfg"
        cfg.write_text("hidden = 8\n", encoding="utf-8")

        def run(out):
            status = main(
                ["train", "--config", str(cfg), "--out", str(out), "--seed", "3", "--latent-dim", "2"]
                + ["--n-utterances", "2"]
                + ["--max-epochs", "2", "--batch", "64"]
                + TINY_STFT
            )
            assert status == EXIT_OK
            return (out / "model.vaew").read_bytes()

        assert run(tmp_path / "a") == run(tmp_path / "b")


class TestEnhance:
    """enhance and eval."""

    def _enhance(self, trained, wavs, out, *extra):
        speech, noise = wavs
        return main(
            ["enhance", "--model", str(trained / "model.vaew"), "--speech", str(speech), "--noise", str(noise)]
            + ["--out", str(out), "--snr", "0"]
            + TINY_STFT
            + TINY_ENGINE
            + list(extra)
        )

    @pytest.mark.parametrize("method,recon", [("vem", "mh"), ("vem", "s"), ("heuristic", "z"), ("mcem", "mh")])
    def test_methods(self, trained, wavs, tmp_path, method, recon):
        """Each engine writes a WAV of the input length and a report ending in a summary."""
        status = self._enhance(trained, wavs, tmp_path, "--method", method, "--recon", recon)
        assert status == EXIT_OK
        enhanced = read_wav(tmp_path / "enhanced.wav")
        assert len(enhanced) == len(read_wav(wavs[0])), "output length must match the input"
        records = read_jsonl(tmp_path / "report.jsonl")
        assert records[-1]["type"] == "summary" and records[-1]["method"] == method
        assert records[-1]["final_si_sdr_db"] is not None, "a clean reference was available"
        assert all(r["elapsed_ms"] > 0 for r in records[:-1])

    def test_deterministic(self, trained, wavs, tmp_path):
        """Two runs with the same seed write identical audio."""
        assert self._enhance(trained, wavs, tmp_path / "a", "--seed", "4") == EXIT_OK
        assert self._enhance(trained, wavs, tmp_path / "b", "--seed", "4") == EXIT_OK
        assert (tmp_path / "a" / "enhanced.wav").read_bytes() == (tmp_path / "b" / "enhanced.wav").read_bytes()

    def test_eval_prints_si_sdr(self, trained, wavs, tmp_path, capsys):
        """eval prints the SI-SDR of the enhanced file with four decimals."""
        assert self._enhance(trained, wavs, tmp_path) == EXIT_OK
        capsys.readouterr()
        status = main(["eval", "--reference", str(wavs[0]), "--estimate", str(tmp_path / "enhanced.wav")])
        assert status == EXIT_OK
        printed = capsys.readouterr().out.strip()
        assert len(printed.split(".")[1]) == 4, f"unexpected format {printed!r}"
        assert np.isfinite(float(printed))

    def test_silent_input(self, trained, tmp_path):
        """A silent mixture enhances to silence."""
        silent = write_wav(tmp_path / "silence.wav", Waveform(np.zeros(4000), 16000), subtype="FLOAT")
        status = main(
            ["enhance", "--model", str(trained / "model.vaew"), "--input", str(silent), "--out", str(tmp_path)]
            + TINY_STFT
            + TINY_ENGINE
        )
        assert status == EXIT_OK
        assert np.all(read_wav(tmp_path / "enhanced.wav").samples == 0)

    def test_model_geometry_mismatch_fails(self, trained, wavs, tmp_path):
        """A model trained for another frame size is a runtime failure."""
        speech, _ = wavs
        status = main(
            ["enhance", "--model", str(trained / "model.vaew"), "--input", str(speech), "--out", str(tmp_path)]
            + ["--frame-size", "128", "--hop", "32"]
        )
        assert status == EXIT_FAILURE

    def test_missing_model_fails(self, wavs, tmp_path):
        """An unreadable model file is a runtime failure."""
        status = main(["enhance", "--model", str(tmp_path / "none.vaew"), "--input", str(wavs[0])])
        assert status == EXIT_FAILURE

    def test_invalid_config(self, wavs):
        """Giving both an input and a speech/noise pair is a configuration error."""
        speech, noise = wavs
        status = main(
            ["enhance", "--model", "m", "--input", str(speech), "--speech", str(speech), "--noise", str(noise)]
        )
        assert status == EXIT_CONFIG


class TestBenchmark:
    """benchmark."""

    def test_outputs(self, trained, tmp_path):
        """results.csv, convergence.csv and summary.json are written and consistent."""
        status = main(
            ["benchmark", "--model", str(trained / "model.vaew"), "--out", str(tmp_path), "--n-utterances", "1"]
            + ["--d-values", "1", "--methods", "vem,heuristic,mcem", "--modes", "mh,s"]
            + TINY_STFT
            + TINY_ENGINE
        )
        assert status == EXIT_OK
        with open(tmp_path / "results.csv", newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        combos = [(r["method"], r["mode"]) for r in rows]
        assert combos == sorted(combos), "rows are sorted"
        assert set(combos) == {("heuristic", "mh"), ("heuristic", "s"), ("mcem", "mh"), ("vem", "mh"), ("vem", "s")}
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert len(summary["orderings"]) == 2, "one VEM/heuristic comparison per mode"
        assert summary["mcem_vs_vem"][0]["time_ratio"] > 0
        assert (tmp_path / "convergence.csv").read_text().startswith("method,D,iteration")

    def test_results_byte_identical(self, trained, tmp_path):
        """Two runs with the same seed write byte-identical results tables; timings go to their own file."""

        def run(out):
            assert (
                main(
                    ["benchmark", "--model", str(trained / "model.vaew"), "--out", str(out), "--n-utterances", "1"]
                    + ["--methods", "vem,mcem", "--modes", "mh,s"]
                    + TINY_STFT
                    + TINY_ENGINE
                )
                == EXIT_OK
            )
            assert (out / "timings.csv").read_text(encoding="utf-8").startswith("method,D,utterance,iters,ms_per_iter")
            return (out / "results.csv").read_bytes()

        assert run(tmp_path / "a") == run(tmp_path / "b")
