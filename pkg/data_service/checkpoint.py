"""
Checkpoint container.

Layout (little-endian):

    magic b"XLCK" | uint32 version | uint64 header length | header JSON (UTF-8)
    uint32 record count
    record*: uint16 name length | name (UTF-8) | uint8 ndim | uint32 dims[ndim]
             | float64 payload (row-major)

The header carries the model/train configs, vocabulary, step counter, phase,
seed and generator state. Records are named ``param/<name>``,
``adam.m/<name>`` and ``adam.v/<name>``. Files are written to a temporary
sibling and moved into place; loading parses the whole file before returning
anything.
"""

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .errors import CheckpointError


MAGIC = b"XLCK"
FORMAT_VERSION = 1
PREAMBLE = struct.Struct("<4sIQ")
COUNT = struct.Struct("<I")
NAME_LEN = struct.Struct("<H")
NDIM = struct.Struct("<B")
DIM = struct.Struct("<I")
PAYLOAD_DTYPE = np.dtype("<f8")

PARAM_PREFIX = "param/"
MOMENT1_PREFIX = "adam.m/"
MOMENT2_PREFIX = "adam.v/"

PathLike = Union[str, Path]


@dataclass
class Checkpoint:
    model_config: dict
    parameters: Dict[str, np.ndarray]
    train_config: dict = field(default_factory=dict)
    vocab: List[str] = field(default_factory=list)
    optimizer_step: int = 0
    moment1: Dict[str, np.ndarray] = field(default_factory=dict)
    moment2: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    phase: str = "ce"
    seed: int = 0
    rng_state: Optional[dict] = None
    version: int = FORMAT_VERSION


# ============================================================================
# Writing
# ============================================================================

def _records(ckpt: Checkpoint) -> List[Tuple[str, np.ndarray]]:
    records = [(PARAM_PREFIX + k, v) for k, v in ckpt.parameters.items()]
    records += [(MOMENT1_PREFIX + k, v) for k, v in ckpt.moment1.items()]
    records += [(MOMENT2_PREFIX + k, v) for k, v in ckpt.moment2.items()]
    return records


def save_checkpoint(path: PathLike, ckpt: Checkpoint) -> None:
    """Serialise ``ckpt`` to ``path`` (atomic replace)."""
    header = {
        "model_config": ckpt.model_config,
        "train_config": ckpt.train_config,
        "vocab": list(ckpt.vocab),
        "optimizer_step": int(ckpt.optimizer_step),
        "step": int(ckpt.step),
        "phase": ckpt.phase,
        "seed": int(ckpt.seed),
        "rng_state": ckpt.rng_state,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    records = _records(ckpt)

    chunks = [PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header_bytes)), header_bytes, COUNT.pack(len(records))]
    for name, array in records:
        array = np.ascontiguousarray(array, dtype=PAYLOAD_DTYPE)
        name_bytes = name.encode("utf-8")
        chunks.append(NAME_LEN.pack(len(name_bytes)))
        chunks.append(name_bytes)
        chunks.append(NDIM.pack(array.ndim))
        chunks.extend(DIM.pack(d) for d in array.shape)
        chunks.append(array.tobytes(order="C"))

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(b"".join(chunks))
    os.replace(tmp, path)


# ============================================================================
# Reading
# ============================================================================

class _Reader:
    def __init__(self, raw: bytes, path):
        self.raw = raw
        self.offset = 0
        self.path = path

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.raw):
            raise CheckpointError(f"checkpoint truncated while reading {what}", self.path,
                                  expected=end, found=len(self.raw))
        chunk = self.raw[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: struct.Struct, what: str):
        return fmt.unpack(self.take(fmt.size, what))


def load_checkpoint(
    path: PathLike, expected_shapes: Optional[Dict[str, Tuple[int, ...]]] = None
) -> Checkpoint:
    """
    Parse a checkpoint file.

    Args:
        path: File written by ``save_checkpoint``
        expected_shapes: Parameter shapes implied by the model config; when
            given, every parameter must be present with exactly this shape

    Raises:
        CheckpointError: On wrong magic/version, truncation, trailing bytes,
            malformed header or a parameter shape mismatch
    """
    reader = _Reader(Path(path).read_bytes(), path)
    magic, version, header_len = reader.unpack(PREAMBLE, "preamble")
    if magic != MAGIC:
        raise CheckpointError("bad checkpoint magic", path, expected=MAGIC, found=magic)
    if version != FORMAT_VERSION:
        raise CheckpointError("unsupported checkpoint version", path, expected=FORMAT_VERSION, found=version)
    try:
        header = json.loads(reader.take(header_len, "header").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}", path) from exc
    if not isinstance(header, dict) or "model_config" not in header:
        raise CheckpointError("checkpoint header lacks model_config", path)

    (count,) = reader.unpack(COUNT, "record count")
    groups = {PARAM_PREFIX: {}, MOMENT1_PREFIX: {}, MOMENT2_PREFIX: {}}
    for _ in range(count):
        (name_len,) = reader.unpack(NAME_LEN, "record name length")
        name = reader.take(name_len, "record name").decode("utf-8")
        (ndim,) = reader.unpack(NDIM, "record rank")
        shape = tuple(reader.unpack(DIM, "record shape")[0] for _ in range(ndim))
        size = int(np.prod(shape, dtype=np.int64)) * PAYLOAD_DTYPE.itemsize
        array = np.frombuffer(reader.take(size, f"record {name}"), dtype=PAYLOAD_DTYPE).reshape(shape)
        prefix = next((p for p in groups if name.startswith(p)), None)
        if prefix is None:
            raise CheckpointError("unknown checkpoint record", path, found=name)
        groups[prefix][name[len(prefix):]] = array.astype(np.float64)
    if reader.offset != len(reader.raw):
        raise CheckpointError("trailing bytes after checkpoint records", path,
                              expected=reader.offset, found=len(reader.raw))

    parameters = groups[PARAM_PREFIX]
    if expected_shapes is not None:
        check_shapes(parameters, expected_shapes, path)

    return Checkpoint(
        model_config=header["model_config"],
        parameters=parameters,
        train_config=header.get("train_config", {}),
        vocab=header.get("vocab", []),
        optimizer_step=header.get("optimizer_step", 0),
        moment1=groups[MOMENT1_PREFIX],
        moment2=groups[MOMENT2_PREFIX],
        step=header.get("step", 0),
        phase=header.get("phase", "ce"),
        seed=header.get("seed", 0),
        rng_state=header.get("rng_state"),
        version=version,
    )


def check_shapes(
    parameters: Dict[str, np.ndarray], expected: Dict[str, Tuple[int, ...]], path: Optional[PathLike] = None
) -> None:
    """Raise CheckpointError unless ``parameters`` has exactly the ``expected`` names and shapes."""
    missing = sorted(set(expected) - set(parameters))
    extra = sorted(set(parameters) - set(expected))
    if missing or extra:
        raise CheckpointError("checkpoint parameters do not match the model config", path,
                              expected=missing, found=extra)
    for name, shape in expected.items():
        if tuple(parameters[name].shape) != tuple(shape):
            raise CheckpointError(f"shape mismatch for {name}", path,
                                  expected=tuple(shape), found=tuple(parameters[name].shape))
