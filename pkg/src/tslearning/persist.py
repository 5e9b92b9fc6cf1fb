"""Binary checkpoints.

Layout, all integers little-endian::

    8 bytes   magic  b"TSLEARN\\0"
    u32       format version (1)
    u32       length of the text block, then the UTF-8 text block
              (canonical network spec followed by a "state ..." line)
    per parameter, in layer order:
        u32 name length, name bytes, u32 rank, rank * u64 extents,
        float32 values
    u64       CRC-64/ECMA-182 of every preceding byte
"""

from __future__ import annotations

import math
import os
import struct
from pathlib import Path

import numpy as np
from crc import Calculator, Crc64

from .autodiff import Tensor
from .model import ModelState, NetworkSpec, SpecError, freeze

MAGIC = b"TSLEARN\0"
VERSION = 1

_crc = Calculator(Crc64.CRC64, optimized=True)


class CheckpointError(ValueError):
    """Base class for unreadable checkpoints."""


class MagicError(CheckpointError):
    pass


class VersionError(CheckpointError):
    pass


class TruncatedError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass


class LayoutError(CheckpointError):
    """Parameter records disagree with the stored network spec."""


def crc64(data: bytes) -> int:
    return _crc.checksum(data)


def encode(model: ModelState) -> bytes:
    text = model.spec.to_text() + f"state {'frozen' if model.frozen else 'training'}\n"
    tb = text.encode("utf-8")
    parts = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(tb)), tb]
    for name, shape in model.spec.parameter_shapes():
        t = model.params[name]
        if tuple(t.shape) != tuple(shape):
            raise LayoutError(f"parameter {name} has shape {t.shape}, spec says {shape}")
        nb = name.encode("utf-8")
        parts.append(struct.pack("<I", len(nb)))
        parts.append(nb)
        parts.append(struct.pack("<I", len(shape)))
        parts.append(struct.pack(f"<{len(shape)}Q", *shape))
        parts.append(np.ascontiguousarray(t.data, dtype="<f4").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<Q", crc64(body))


def encoded_size(spec: NetworkSpec, frozen: bool = True) -> int:
    """Exact byte length of a checkpoint for ``spec``."""
    text = spec.to_text() + f"state {'frozen' if frozen else 'training'}\n"
    size = len(MAGIC) + 4 + 4 + len(text.encode("utf-8")) + 8
    for name, shape in spec.parameter_shapes():
        size += 4 + len(name.encode("utf-8")) + 4 + 8 * len(shape) + 4 * math.prod(shape)
    return size


def save(model: ModelState, path) -> None:
    """Write ``model`` atomically (temporary file, then rename)."""
    path = Path(path)
    data = encode(model)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise OSError(f"cannot write checkpoint {path}: {exc}") from exc


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedError(f"checkpoint ends inside {what} at byte offset {self.pos}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def _check_crc(data: bytes) -> None:
    if len(data) < len(MAGIC) + 8:
        raise TruncatedError("checkpoint too short to hold a checksum")
    stored = struct.unpack("<Q", data[-8:])[0]
    actual = crc64(data[:-8])
    if stored != actual:
        raise ChecksumError(f"checksum mismatch: stored {stored:016x}, computed {actual:016x}")


def decode(data: bytes, frozen: bool = True) -> tuple[ModelState, str]:
    """Parse checkpoint bytes into ``(model, recorded_state)``."""
    if data[: len(MAGIC)] != MAGIC:
        if len(data) < len(MAGIC) and MAGIC.startswith(data):
            raise TruncatedError("checkpoint ends inside the magic bytes")
        raise MagicError(f"bad magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}")
    r = _Reader(data)
    r.pos = len(MAGIC)
    version = r.u32("version")
    if version != VERSION:
        raise VersionError(f"unsupported checkpoint version {version}, expected {VERSION}")
    tlen = r.u32("text length")
    text = r.take(tlen, "spec text")
    try:
        lines = text.decode("utf-8").splitlines()
        state = "training"
        if lines and lines[-1].startswith("state "):
            state = lines.pop().split(" ", 1)[1]
        spec = NetworkSpec.from_text("\n".join(lines))
    except (UnicodeDecodeError, SpecError, ValueError) as exc:
        _check_crc(data)
        raise LayoutError(f"stored spec is unreadable: {exc}") from None

    params = {}
    for name, shape in spec.parameter_shapes():
        nlen = r.u32("parameter name length")
        got_name = r.take(nlen, "parameter name").decode("utf-8", errors="replace")
        rank = r.u32("parameter rank")
        if got_name != name or rank != len(shape):
            _check_crc(data)
            raise LayoutError(f"expected parameter {name} of rank {len(shape)}, found {got_name!r} of rank {rank}")
        extents = struct.unpack(f"<{rank}Q", r.take(8 * rank, "parameter extents"))
        if tuple(extents) != tuple(shape):
            _check_crc(data)
            raise LayoutError(f"parameter {name} stored as {extents}, spec says {shape}")
        raw = r.take(4 * math.prod(shape), f"values of {name}")
        params[name] = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape)
    remaining = len(data) - r.pos
    if remaining < 8:
        raise TruncatedError(f"checkpoint ends inside the checksum at byte offset {r.pos}")
    if remaining > 8:
        _check_crc(data)
        raise LayoutError(f"{remaining - 8} unexpected trailing bytes after the parameters")
    _check_crc(data)

    model = ModelState(spec, {n: Tensor(a, requires_grad=True, name=n) for n, a in params.items()})
    if frozen:
        freeze(model)
    return model, state


def load(path, frozen: bool = True) -> ModelState:
    """Read and validate a checkpoint; the model comes back frozen unless
    ``frozen=False``."""
    data = Path(path).read_bytes()
    model, _ = decode(data, frozen)
    return model


def load_with_state(path, frozen: bool = True) -> tuple[ModelState, str]:
    return decode(Path(path).read_bytes(), frozen)


def file_checksum(path) -> int:
    """CRC-64 of a whole file; handy for before/after comparisons."""
    return crc64(Path(path).read_bytes())
