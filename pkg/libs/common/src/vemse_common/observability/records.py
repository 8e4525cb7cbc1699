"""
Line-delimited JSON records.

Training logs, enhancement reports and benchmark traces are all written one JSON
object per line so that plotting and analysis stay outside the package.
"""

import json
import math
from collections.abc import Iterable, Mapping
from enum import Enum
from pathlib import Path
from types import TracebackType
from typing import Any, TextIO

import numpy as np


def _jsonable(value: Any) -> Any:
    # NaN/inf become null to keep the output strict JSON
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def dumps_record(record: Mapping[str, Any]) -> str:
    """Serialize one record with sorted keys so output is byte-stable."""
    return json.dumps(_jsonable(record), sort_keys=True, separators=(",", ":"))


class JsonlWriter:
    """Append-only writer for line-delimited JSON records."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._fh: TextIO | None = None

    def __enter__(self) -> "JsonlWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", encoding="utf-8")
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def write(self, record: Mapping[str, Any]) -> None:
        if self._fh is None:
            raise RuntimeError("JsonlWriter used outside of a with-block")
        self._fh.write(dumps_record(record) + "\n")


def write_jsonl(path: str | Path, records: Iterable[Mapping[str, Any]]) -> Path:
    with JsonlWriter(path) as writer:
        for record in records:
            writer.write(record)
    return Path(path)


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_json(path: str | Path, record: Mapping[str, Any]) -> Path:
    """Write one indented JSON document (summaries meant to be read by people too)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(record), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path
