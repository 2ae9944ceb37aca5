"""Fixed-size seed sidecar: the only side information sent to the decoder.

Layout (little-endian)::

    offset size field
    0      4    magic  b"GSDS"
    4      1    version (1)
    5      2    total_steps T        u16
    7      2    num_candidates N     u16
    9      2    selected_index       u16
    11     8    base_seed            u64
    19     4    CRC-32 (IEEE) of bytes 0..18

23 bytes in total, independent of image size and of N.
"""
import struct
import zlib
from dataclasses import dataclass

from .errors import (SidecarCorruptionError, SidecarError, SidecarFormatError,
                     SidecarSemanticError, SidecarTruncationError)

MAGIC = b"GSDS"
VERSION = 1
_BODY = struct.Struct("<4sBHHHQ")
_CRC = struct.Struct("<I")
PAYLOAD_SIZE = _BODY.size
SIDECAR_SIZE = _BODY.size + _CRC.size


@dataclass(frozen=True)
class SeedSidecar:
    total_steps: int
    num_candidates: int
    selected_index: int
    base_seed: int


def encode_sidecar(s):
    for name, limit in (("total_steps", 0xFFFF), ("num_candidates", 0xFFFF),
                        ("selected_index", 0xFFFF), ("base_seed", (1 << 64) - 1)):
        v = getattr(s, name)
        if not 0 <= v <= limit:
            raise SidecarError(f"{name}={v} does not fit its field")
    if s.num_candidates < 1 or s.selected_index >= s.num_candidates:
        raise SidecarError(f"selected_index {s.selected_index} out of range for N={s.num_candidates}")
    body = _BODY.pack(MAGIC, VERSION, s.total_steps, s.num_candidates, s.selected_index, s.base_seed)
    return body + _CRC.pack(zlib.crc32(body))


def decode_sidecar(data):
    data = bytes(data)
    if len(data) < SIDECAR_SIZE:
        raise SidecarTruncationError(f"sidecar is {len(data)} bytes, need {SIDECAR_SIZE}")
    if len(data) > SIDECAR_SIZE:
        raise SidecarFormatError(f"sidecar is {len(data)} bytes, expected {SIDECAR_SIZE}")
    body, (crc,) = data[:PAYLOAD_SIZE], _CRC.unpack(data[PAYLOAD_SIZE:])
    magic, version, T, N, idx, seed = _BODY.unpack(body)
    if magic != MAGIC:
        raise SidecarFormatError(f"bad magic {magic!r}")
    if zlib.crc32(body) != crc:
        raise SidecarCorruptionError("CRC mismatch")
    if version != VERSION:
        raise SidecarFormatError(f"unsupported version {version}")
    if idx >= N:
        raise SidecarSemanticError(f"selected_index {idx} >= num_candidates {N}")
    return SeedSidecar(T, N, idx, seed)


def write_sidecar(path, s):
    with open(path, "wb") as fh:
        fh.write(encode_sidecar(s))


def read_sidecar(path):
    with open(path, "rb") as fh:
        return decode_sidecar(fh.read())
