"""Binary checkpoint format "QEN1".

Layout (all integers little-endian):

    magic     4 bytes  b"QEN1"
    version   u32      currently 1
    count     u32      number of parameter records
    records   count x { name_len u16, name utf-8,
                        dtype u8 (0 = float32, 1 = float64),
                        ndim u8, extents ndim x u32,
                        raw little-endian scalars, row-major }
    checksum  u64      FNV-1a 64 over every preceding byte

Scalars round-trip bit for bit; the checksum is verified before any
record is parsed, so truncation or corruption is reported as a checksum
error rather than a confusing parse failure.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import CheckpointError, ChecksumError

MAGIC = b"QEN1"
VERSION = 1

_DTYPE_TAGS = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_TAG_FOR_KIND = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK
    return h


def save_checkpoint(path, params: dict[str, np.ndarray]) -> None:
    """Serialize named arrays; insertion order of the dict is preserved."""
    chunks = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(params))]
    for name, arr in params.items():
        tag = _TAG_FOR_KIND.get(arr.dtype.newbyteorder("="))
        if tag is None:
            raise CheckpointError(f"unsupported dtype {arr.dtype} for parameter {name!r}")
        raw = np.ascontiguousarray(arr, dtype=_DTYPE_TAGS[tag]).tobytes()
        name_b = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name_b)))
        chunks.append(name_b)
        chunks.append(struct.pack("<BB", tag, arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(raw)
    body = b"".join(chunks)
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<Q", fnv1a64(body)))


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise CheckpointError(
                f"{self.path}: record extends past end of file "
                f"(wanted {count} bytes at offset {self.pos})")
        out = self.data[self.pos:self.pos + count]
        self.pos += count
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path) -> dict[str, np.ndarray]:
    """Read back named arrays, verifying checksum, magic, and version."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 4 + 4 + 8:
        raise ChecksumError(f"{path}: file too short ({len(blob)} bytes) to be a checkpoint")
    body, stored = blob[:-8], struct.unpack("<Q", blob[-8:])[0]
    actual = fnv1a64(body)
    if actual != stored:
        raise ChecksumError(
            f"{path}: checksum mismatch (stored 0x{stored:016x}, computed 0x{actual:016x})")
    rd = _Reader(body, path)
    if rd.take(4) != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a QEN1 checkpoint")
    (version,) = rd.unpack("<I")
    if version != VERSION:
        raise CheckpointError(f"{path}: unknown format version {version} (supported: {VERSION})")
    (count,) = rd.unpack("<I")
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = rd.unpack("<H")
        name = rd.take(name_len).decode("utf-8")
        tag, ndim = rd.unpack("<BB")
        if tag not in _DTYPE_TAGS:
            raise CheckpointError(f"{path}: unknown dtype tag {tag} for {name!r}")
        shape = rd.unpack(f"<{ndim}I")
        dtype = _DTYPE_TAGS[tag]
        n_bytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        arr = np.frombuffer(rd.take(n_bytes), dtype=dtype).reshape(shape)
        # plain asarray: ascontiguousarray would promote 0-d scalars to 1-d
        out[name] = np.asarray(arr, dtype=dtype.newbyteorder("="), order="C").copy()
    if rd.pos != len(body):
        raise CheckpointError(f"{path}: {len(body) - rd.pos} trailing bytes after last record")
    return out


def load_into_model(model, path, allow_missing_lambda: bool = False) -> None:
    """Load a checkpoint into a constructed model of matching configuration.

    With ``allow_missing_lambda`` a plain-baseline checkpoint can enter an
    enhancer-enabled model: absent coupling vectors stay zero, which makes
    the loaded model functionally identical to the baseline.
    """
    stored = load_checkpoint(path)
    current = model.parameters()
    merged = {}
    for name, arr in current.items():
        if name in stored:
            val = stored[name]
            if val.shape != arr.shape:
                raise CheckpointError(
                    f"{path}: shape mismatch for {name!r}: checkpoint {val.shape}, model {arr.shape}")
            merged[name] = val.astype(arr.dtype, copy=False)
        elif "lam[" in name and allow_missing_lambda:
            merged[name] = np.zeros_like(arr)
        else:
            raise CheckpointError(f"{path}: parameter {name!r} missing from checkpoint")
    extra = set(stored) - set(current)
    if extra:
        raise CheckpointError(f"{path}: checkpoint has parameters the model lacks: {sorted(extra)}")
    model.load_parameters(merged)
