"""
Bit-exact persistence of VAE weights.

File layout::

    b"VAEW" | version: u32 LE | header_len: u32 LE | header: UTF-8 JSON | payload

The header lists ``L``, ``F``, ``hidden`` and a tensor table of
``{name, shape, byte_offset}`` for the trained tensors; offsets are relative to
the start of the payload, which holds them as row-major little-endian float64.
The fixed encoder input standardisation travels in the header as
``input_normalization``, one list of F floats per vector; JSON floats round-trip
exactly, so the file stays bit-exact.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any

import numpy as np

from vemse_core.errors import (
    BadMagicError,
    NonFiniteWeightsError,
    ShapeInconsistencyError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from vemse_core.vae.model import INPUT_NAMES, TRAINABLE_NAMES, VaeModel, param_shapes

logger = logging.getLogger(__name__)

MAGIC = b"VAEW"
VERSION = 1
_PREFIX = struct.Struct("<4sII")
_DTYPE = np.dtype("<f8")


def _header(m: VaeModel) -> tuple[dict[str, Any], list[bytes]]:
    tensors = []
    chunks = []
    offset = 0
    for name in TRAINABLE_NAMES:
        array = np.ascontiguousarray(m.params[name], dtype=_DTYPE)
        tensors.append({"name": name, "shape": list(array.shape), "byte_offset": offset})
        chunk = array.tobytes(order="C")
        chunks.append(chunk)
        offset += len(chunk)
    header = {
        "L": m.latent_dim,
        "F": m.n_freqs,
        "hidden": m.hidden,
        "dtype": "<f8",
        "payload_bytes": offset,
        "tensors": tensors,
        "input_normalization": {name: [float(v) for v in m.params[name]] for name in INPUT_NAMES},
    }
    return header, chunks


def save(m: VaeModel, path: str | Path) -> Path:
    header, chunks = _header(m)
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_PREFIX.pack(MAGIC, VERSION, len(header_bytes)))
        f.write(header_bytes)
        for chunk in chunks:
            f.write(chunk)
    logger.info("saved model L=%d F=%d to %s", m.latent_dim, m.n_freqs, path)
    return path


def read_header(path: str | Path) -> tuple[dict[str, Any], bytes]:
    """Validate the prefix and return the parsed header and the raw payload."""
    raw = Path(path).read_bytes()
    if len(raw) < _PREFIX.size:
        raise TruncatedPayloadError(f"{path}: file too short ({len(raw)} bytes) for a model header")
    magic, version, header_len = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version} not supported (expected {VERSION})")
    start = _PREFIX.size
    if len(raw) < start + header_len:
        raise TruncatedPayloadError(f"{path}: header truncated")
    try:
        header = json.loads(raw[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ShapeInconsistencyError(f"{path}: unreadable header: {e}") from e
    return header, raw[start + header_len :]


def load(path: str | Path) -> VaeModel:
    header, payload = read_header(path)
    try:
        L, F, hidden = int(header["L"]), int(header["F"]), int(header["hidden"])
        table = {t["name"]: t for t in header["tensors"]}
    except (KeyError, TypeError, ValueError) as e:
        raise ShapeInconsistencyError(f"{path}: malformed header: {e}") from e

    shapes = param_shapes(F, L, hidden)
    expected = {name: shapes[name] for name in TRAINABLE_NAMES}
    if sorted(table) != sorted(expected):
        raise ShapeInconsistencyError(
            f"{path}: tensor table {sorted(table)} does not match the fixed architecture"
        )

    params: dict[str, np.ndarray] = {}
    for name, shape in expected.items():
        entry = table[name]
        if tuple(entry["shape"]) != shape:
            raise ShapeInconsistencyError(
                f"{path}: {name} has shape {tuple(entry['shape'])}, expected {shape} for L={L} F={F}"
            )
        n_bytes = int(np.prod(shape)) * _DTYPE.itemsize
        offset = int(entry["byte_offset"])
        if offset < 0 or offset + n_bytes > len(payload):
            raise TruncatedPayloadError(
                f"{path}: payload has {len(payload)} bytes, {name} needs bytes "
                f"{offset}..{offset + n_bytes}"
            )
        array = np.frombuffer(payload, dtype=_DTYPE, count=int(np.prod(shape)), offset=offset)
        if not np.all(np.isfinite(array)):
            raise NonFiniteWeightsError(f"{path}: {name} contains non-finite weights")
        params[name] = array.reshape(shape).astype(np.float64, copy=True)

    params.update(_input_normalization(path, header, F))
    return VaeModel(params)


def _input_normalization(path: str | Path, header: dict[str, Any], n_freqs: int) -> dict[str, np.ndarray]:
    vectors = header.get("input_normalization")
    if not isinstance(vectors, dict) or sorted(vectors) != sorted(INPUT_NAMES):
        raise ShapeInconsistencyError(f"{path}: header lacks the encoder input normalization")
    out = {}
    for name in INPUT_NAMES:
        try:
            array = np.asarray(vectors[name], dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise ShapeInconsistencyError(f"{path}: {name} is not a list of numbers: {e}") from e
        if array.shape != (n_freqs,):
            raise ShapeInconsistencyError(f"{path}: {name} has shape {array.shape}, expected ({n_freqs},)")
        if not np.all(np.isfinite(array)):
            raise NonFiniteWeightsError(f"{path}: {name} contains non-finite values")
        out[name] = array
    return out
