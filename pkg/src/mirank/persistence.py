"""Bit-stable file formats: a binary model container and JSONL query logs.

The model container embeds the configuration snapshot, so inference never
needs a sidecar config, and carries a SHA-256 checksum over the whole
payload. Floats in JSONL are written with Python's shortest round-trip
representation, so write-then-read reproduces every value exactly. All
writes go through a temp file and rename, so concurrent readers never see a
partial file.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Iterable

import numpy as np

from .configs import ModelConfig, ModelParams, expected_block_shapes
from .core import Item, MirankError, QueryRecord, ValidationError
from .simgen import Dataset

__all__ = [
    "LogFormatError",
    "ModelChecksumError",
    "ModelFileError",
    "ModelFormatError",
    "ModelShapeError",
    "ModelVersionError",
    "load_model",
    "read_logs",
    "save_model",
    "write_logs",
]

_MAGIC = b"MIRK"
_VERSION = 1


class ModelFileError(MirankError):
    """Base class for model-file load failures."""


class ModelFormatError(ModelFileError):
    """Truncated file, bad magic, or unparseable header."""


class ModelVersionError(ModelFileError):
    """The file was written by an unsupported format version."""


class ModelChecksumError(ModelFileError):
    """The stored checksum does not match the content."""


class ModelShapeError(ModelFileError):
    """Stored parameter blocks do not match the declared variant and config."""


class LogFormatError(MirankError):
    """A malformed JSONL log line; the message names the line number."""


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(params: ModelParams, path) -> None:
    """Serialize parameters to the checksummed binary container."""
    header = {
        "variant": params.variant,
        "config": asdict(params.config),
        "blocks": [
            {"name": name, "shape": list(array.shape)}
            for name, array in params.blocks.items()
        ],
    }
    header_bytes = json.dumps(header).encode("utf-8")
    body = b"".join(
        np.ascontiguousarray(params.blocks[entry["name"]], dtype="<f8").tobytes()
        for entry in header["blocks"]
    )
    payload = _MAGIC + struct.pack("<II", _VERSION, len(header_bytes)) + header_bytes + body
    _atomic_write(Path(path), payload + hashlib.sha256(payload).digest())


def load_model(path) -> ModelParams:
    """Load a model container; the round trip is bit-exact.

    Raises ModelFormatError / ModelVersionError / ModelChecksumError /
    ModelShapeError for the distinct corruption classes; never crashes on
    arbitrary bytes.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 + 32 or data[:4] != _MAGIC:
        raise ModelFormatError(f"{path}: not a mirank model file")
    version, header_len = struct.unpack("<II", data[4:12])
    if version != _VERSION:
        raise ModelVersionError(f"{path}: unsupported format version {version}")
    payload, checksum = data[:-32], data[-32:]
    if hashlib.sha256(payload).digest() != checksum:
        raise ModelChecksumError(f"{path}: checksum mismatch, file is corrupted")
    if 12 + header_len > len(payload):
        raise ModelFormatError(f"{path}: header length exceeds file size")
    try:
        header = json.loads(payload[12 : 12 + header_len].decode("utf-8"))
        variant = header["variant"]
        config = ModelConfig(
            d=header["config"]["d"],
            hidden_sizes=tuple(header["config"]["hidden_sizes"]),
            lstm_hidden=header["config"]["lstm_hidden"],
            attn_size=header["config"]["attn_size"],
            pos_size=header["config"]["pos_size"],
            max_positions=header["config"]["max_positions"],
        )
        declared = [(entry["name"], tuple(entry["shape"])) for entry in header["blocks"]]
    except (KeyError, TypeError, ValueError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: unparseable header ({exc})") from exc
    try:
        expected = expected_block_shapes(variant, config)
    except ValidationError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
    if dict(declared) != expected:
        raise ModelShapeError(
            f"{path}: stored blocks {dict(declared)} do not match "
            f"variant {variant!r} with its config (expected {expected})"
        )
    blocks: dict[str, np.ndarray] = {}
    offset = 12 + header_len
    for name, shape in declared:
        size = int(np.prod(shape)) * 8
        if offset + size > len(payload):
            raise ModelFormatError(f"{path}: block {name!r} extends past end of file")
        blocks[name] = np.frombuffer(payload[offset : offset + size], dtype="<f8").reshape(shape).copy()
        offset += size
    if offset != len(payload):
        raise ModelFormatError(f"{path}: {len(payload) - offset} trailing bytes after blocks")
    if not all(np.all(np.isfinite(block)) for block in blocks.values()):
        raise ModelShapeError(f"{path}: parameter blocks contain non-finite values")
    return ModelParams(variant=variant, config=config, blocks=blocks)


# ---------------------------------------------------------------------------
# JSONL query logs


def _record_to_json(record: QueryRecord) -> dict:
    obj = {
        "query_id": record.query_id,
        "items": [
            {"id": item.id, "price": item.price, "features": item.local_features.tolist()}
            for item in record.displayed
        ],
        "labels": list(record.labels),
    }
    if record.ground_truth_probs is not None:
        obj["ground_truth_probs"] = list(record.ground_truth_probs)
    return obj


def write_logs(dataset: Dataset | Iterable[QueryRecord], path) -> None:
    """Write records as one JSON object per line (split tags are not stored)."""
    records = dataset.records if isinstance(dataset, Dataset) else tuple(dataset)
    lines = [json.dumps(_record_to_json(record)) for record in records]
    _atomic_write(Path(path), ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8"))


def _parse_record(obj: dict, line_no: int) -> QueryRecord:
    try:
        items = tuple(
            Item(id=entry["id"], price=entry["price"], local_features=np.array(entry["features"], dtype=np.float64))
            for entry in obj["items"]
        )
        dims = {item.local_features.shape[0] for item in items}
        if len(dims) > 1:
            raise ValidationError(f"feature lengths {sorted(dims)} differ within the record")
        return QueryRecord(
            query_id=str(obj["query_id"]),
            displayed=items,
            labels=tuple(obj["labels"]),
            ground_truth_probs=tuple(obj["ground_truth_probs"]) if "ground_truth_probs" in obj else None,
        )
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        raise LogFormatError(f"line {line_no}: invalid record ({exc})") from exc


def read_logs(path, tag: str | None = None) -> Dataset:
    """Stream a JSONL log into a Dataset; malformed lines name their line number."""
    records: list[QueryRecord] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogFormatError(f"line {line_no}: malformed JSON ({exc})") from exc
            if not isinstance(obj, dict):
                raise LogFormatError(f"line {line_no}: expected a JSON object")
            records.append(_parse_record(obj, line_no))
    tags = tuple(tag for _ in records) if tag is not None else None
    return Dataset(records=tuple(records), tags=tags)
