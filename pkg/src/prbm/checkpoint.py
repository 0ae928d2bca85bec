"""Binary checkpoint format.

Layout (all little-endian)::

    b"PRBM1"                     magic, the trailing digit is the version
    u64 n, u64 m, u64 p          model sizes
    f64 alpha
    f64[...]  vh                 blocks in (i, j) row-major order, each n x m row-major
    f64[...]  vbias              by lag i
    f64[...]  hbias              by lag j
    u32 crc32                    zlib CRC-32 of every preceding byte
"""

from __future__ import annotations

import struct
import zlib
from os import PathLike

import numpy as np

from .errors import FormatError, IntegrityError, VersionError
from .model import PRBM, ModelShape

MAGIC = b"PRBM1"
_HEADER = struct.Struct("<QQQd")
_CRC = struct.Struct("<I")


def serialize(model: PRBM) -> bytes:
    s = model.shape
    body = MAGIC + _HEADER.pack(s.n, s.m, s.p, s.alpha)
    for arr in (model.vh, model.vbias, model.hbias):
        body += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    return body + _CRC.pack(zlib.crc32(body))


def deserialize(data: bytes) -> PRBM:
    data = bytes(data)
    head = len(MAGIC)
    if len(data) < head or data[:4] != MAGIC[:4]:
        raise FormatError("not a p-RBM checkpoint (bad magic)")
    if data[:head] != MAGIC:
        raise VersionError(f"unsupported checkpoint version {data[4:head]!r}")
    if len(data) < head + _HEADER.size + _CRC.size:
        raise FormatError("checkpoint truncated inside header")
    n, m, p, alpha = _HEADER.unpack_from(data, head)
    if n < 1 or m < 1 or n > 2**31 or m > 2**31 or p > 2**31:
        raise FormatError(f"inconsistent dimensions n={n}, m={m}, p={p}")
    L = p + 1
    count = L * L * n * m + L * n + L * m
    expected = head + _HEADER.size + 8 * count + _CRC.size
    if len(data) != expected:
        raise FormatError(f"checkpoint has {len(data)} bytes, expected {expected} for n={n}, m={m}, p={p}")
    (crc,) = _CRC.unpack_from(data, len(data) - _CRC.size)
    if zlib.crc32(data[: -_CRC.size]) != crc:
        raise IntegrityError("checkpoint CRC mismatch")
    try:
        shape = ModelShape(n, m, p, alpha)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    flat = np.frombuffer(data, dtype="<f8", count=count, offset=head + _HEADER.size)
    a = L * L * n * m
    b = a + L * n
    try:
        return PRBM(
            shape,
            flat[:a].reshape(L, L, n, m),
            flat[a:b].reshape(L, n),
            flat[b:].reshape(L, m),
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def save(model: PRBM, path: str | PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(model))


def load(path: str | PathLike) -> PRBM:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
