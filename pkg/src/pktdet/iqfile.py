"""Binary I/Q capture files.

Layout: a 16-byte header followed by little-endian interleaved I,Q pairs
stored as 16-bit signed integers (the raw fixed-point codes).

    offset  size  field
    0       4     magic "IQPD"
    4       1     container version (1)
    5       1     total bits of the fixed-point format
    6       1     fractional bits
    7       1     flags (bit 0: signed format)
    8       8     sample count, unsigned little-endian

Only formats whose codes fit in int16 can be stored (signed up to 16 bits,
unsigned up to 15).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .signal import FixedPointFormat, SampleStream

MAGIC = b"IQPD"
VERSION = 1
_HEADER = struct.Struct("<4sBBBBQ")
_FLAG_SIGNED = 0x01


def write_iq(path, stream: SampleStream) -> None:
    fmt = stream.format
    if fmt.max_code > 32767 or fmt.min_code < -32768:
        raise ValueError(f"format {fmt.name()} does not fit 16-bit storage")
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        fmt.total_bits,
        fmt.fractional_bits,
        _FLAG_SIGNED if fmt.signed else 0,
        len(stream),
    )
    interleaved = np.empty(2 * len(stream), dtype="<i2")
    interleaved[0::2] = stream.i.astype(np.int16)
    interleaved[1::2] = stream.q.astype(np.int16)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(interleaved.tobytes())


def read_iq(path) -> SampleStream:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for an IQPD header")
    magic, version, total_bits, frac_bits, flags, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError("not an IQPD file (bad magic)")
    if version != VERSION:
        raise ValueError(f"unsupported IQPD version {version}")
    fmt = FixedPointFormat(total_bits, frac_bits, bool(flags & _FLAG_SIGNED))
    payload = raw[_HEADER.size :]
    if len(payload) != 4 * count:
        raise ValueError(
            f"payload holds {len(payload) // 4} samples but header declares {count}"
        )
    interleaved = np.frombuffer(payload, dtype="<i2")
    return SampleStream(
        format=fmt,
        i=interleaved[0::2].astype(np.int32),
        q=interleaved[1::2].astype(np.int32),
    )
