"""
VAE/NMF speech enhancement - batch command line.

Commands: ``train``, ``enhance``, ``benchmark`` and ``eval``. Exit status is 0 on
success, 2 for invalid configuration and 1 for any other failure.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from typing import Any

from pydantic import ValidationError
from vemse_common.observability import configure_logging
from vemse_core.errors import VemseError

from app.benchmark import cmd_benchmark
from app.commands import cmd_enhance, cmd_eval, cmd_train
from app.config import (
    BenchmarkRunConfig,
    ConfigFileError,
    EnhanceRunConfig,
    EvalRunConfig,
    TrainRunConfig,
    merge_layers,
    parse_config_file,
)

logger = logging.getLogger("app")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

_CONFIGS: dict[str, type[Any]] = {
    "train": TrainRunConfig,
    "enhance": EnhanceRunConfig,
    "benchmark": BenchmarkRunConfig,
    "eval": EvalRunConfig,
}

# argparse bookkeeping that is not part of any run config
_NOT_CONFIG = ("command", "config")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K", type=int, help="NMF rank (default 10)")
    p.add_argument("--D", type=int, help="latent samples per E-step; R for mcem (default 1, or 5 for mcem)")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--mh-iters", type=int)
    p.add_argument("--mh-keep", type=int)
    p.add_argument("--mh-eps2", type=float)
    p.add_argument("--track-mode", choices=["mh", "s", "z"], help="reconstruction scored after every iteration")
    p.add_argument("--frame-size", type=int)
    p.add_argument("--hop", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vemse", description="VAE/NMF speech enhancement")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", parents=[common], help="train a toy VAE on synthetic speech")
    train.add_argument("--model", help="model file to write (default OUT/model.vaew)")
    train.add_argument("--latent-dim", type=int)
    train.add_argument("--n-utterances", type=int)
    train.add_argument("--max-epochs", type=int)
    train.add_argument("--patience", type=int)
    train.add_argument("--lr", type=float)
    train.add_argument("--batch", type=int)
    train.add_argument("--frame-size", type=int)
    train.add_argument("--hop", type=int)

    enhance = sub.add_parser("enhance", parents=[common], help="enhance one mixture")
    enhance.add_argument("--model")
    enhance.add_argument("--input", help="mixture WAV")
    enhance.add_argument("--speech", help="clean speech WAV, mixed with --noise at --snr")
    enhance.add_argument("--noise")
    enhance.add_argument("--snr", type=float)
    enhance.add_argument("--method", choices=["vem", "mcem", "heuristic"])
    enhance.add_argument("--recon", choices=["mh", "s", "z"])
    _engine_flags(enhance)

    bench = sub.add_parser("benchmark", parents=[common], help="compare the engines on toy mixtures")
    bench.add_argument("--model")
    bench.add_argument("--n-utterances", type=int)
    bench.add_argument("--snr", type=float)
    bench.add_argument("--d-values", type=_int_list, help="comma-separated D values, e.g. 1,10")
    bench.add_argument("--r-values", type=_int_list, help="comma-separated MCEM R values (default 5)")
    bench.add_argument("--methods", type=_str_list, help="comma-separated subset of vem,mcem,heuristic")
    bench.add_argument("--modes", type=_str_list, help="comma-separated subset of mh,s,z")
    bench.add_argument("--workers", type=int)
    _engine_flags(bench)

    ev = sub.add_parser("eval", parents=[common], help="SI-SDR of an estimate against a reference")
    ev.add_argument("--reference")
    ev.add_argument("--estimate")
    return parser


def load_config(args: argparse.Namespace) -> Any:
    """Defaults < config file < flags, validated by the command's run config."""
    file_values = parse_config_file(args.config) if args.config else {}
    flags = {k.replace("-", "_"): v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    return _CONFIGS[args.command].model_validate(merge_layers(file_values, flags))


def _run(command: str, cfg: Any) -> None:
    if command == "train":
        cmd_train(cfg)
    elif command == "enhance":
        cmd_enhance(cfg)
    elif command == "benchmark":
        cmd_benchmark(cfg)
    else:
        print(f"{cmd_eval(cfg):.4f}")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ValidationError, ConfigFileError) as e:
        configure_logging("ERROR")
        logger.error("invalid configuration for %s: %s", args.command, e)
        return EXIT_CONFIG

    configure_logging(cfg.log_level)
    try:
        _run(args.command, cfg)
    except (VemseError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
