"""Error-bounded 1-D coding of serialized nodal values.

The built-in coder predicts each value from the previous reconstructed value,
quantizes the residual to a multiple of ``2 * eb_abs`` and stores values that
cannot meet the bound raw, so ``max |x' - x| <= eb_abs`` always holds.

UMC1 stream layout (little-endian)::

    offset  size  field
    0       4     magic b"UMC1"
    4       2     u16 version (1)
    6       1     u8 predictor id (0 delta, 1 lorenzo1)
    7       1     u8 flags (bit 0: payload deflated with zlib; others 0)
    8       8     u64 n, number of values
    16      8     f64 eb_abs
    24      8     u64 payload length in bytes
    32      ...   payload

    payload (after inflating, when flagged):
            8     u64 token byte count T
            T     token stream, unsigned LEB128 varints:
                    0       exception, take the next raw value
                    2k      run of k zero quanta (k >= 1)
                    2z - 1  one nonzero quantum, zigzag code z >= 1
            8     u64 exception count X
            8*X   f64 raw exception values

The first value has no predecessor and is always stored as an exception.
``lorenzo1`` is currently the same one-term predictor as ``delta`` under a
separate id, reserved for a two-term variant.
"""

from __future__ import annotations

import math
import os
import shlex
import shutil
import struct
import subprocess
import tempfile
import zlib
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import CorruptDataError, ExternalCodecError

UMC1_MAGIC = b"UMC1"
UMC1_VERSION = 1
PREDICTORS = {"delta": 0, "lorenzo1": 1}
FLAG_ZLIB = 0x01
TMPDIR_ENV = "MESHSERIAL_TMPDIR"

_HEADER = struct.Struct("<4sHBBQdQ")
_U64 = struct.Struct("<Q")


@dataclass(frozen=True)
class CompressedStream:
    predictor: int
    n: int
    eb_abs: float
    payload: bytes
    flags: int = 0
    version: int = UMC1_VERSION

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(
            UMC1_MAGIC, self.version, self.predictor, self.flags, self.n, self.eb_abs, len(self.payload)
        )
        return head + self.payload

    @property
    def nbytes(self) -> int:
        return _HEADER.size + len(self.payload)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CompressedStream":
        data = bytes(data)
        if len(data) < 4 or data[:4] != UMC1_MAGIC:
            raise CorruptDataError("bad magic")
        if len(data) < _HEADER.size:
            raise CorruptDataError("truncated header")
        _, version, predictor, flags, n, eb_abs, length = _HEADER.unpack_from(data)
        if version != UMC1_VERSION:
            raise CorruptDataError(f"unsupported version {version}")
        if predictor not in PREDICTORS.values():
            raise CorruptDataError(f"unknown predictor id {predictor}")
        if flags & ~FLAG_ZLIB:
            raise CorruptDataError(f"unknown flags 0x{flags:02x}")
        if not (math.isfinite(eb_abs) and eb_abs > 0):
            raise CorruptDataError(f"invalid error bound {eb_abs!r}")
        if len(data) - _HEADER.size < length:
            raise CorruptDataError("truncated payload")
        if len(data) - _HEADER.size > length:
            raise CorruptDataError("trailing bytes after payload")
        return cls(predictor, n, eb_abs, data[_HEADER.size:], flags, version)


def _as_array(values) -> np.ndarray:
    return np.ascontiguousarray(getattr(values, "values", values), dtype=np.float64).reshape(-1)


def compress(values, eb_abs: float, predictor: str = "delta", lossless: bool = False) -> CompressedStream:
    """Encode ``values`` so that every decoded value is within ``eb_abs``.

    ``lossless=True`` deflates the payload with zlib as an extra stage.
    """
    x = _as_array(values)
    if predictor not in PREDICTORS:
        raise ValueError(f"unknown predictor {predictor!r}; choose from {sorted(PREDICTORS)}")
    if not (math.isfinite(eb_abs) and eb_abs > 0):
        raise ValueError(f"error bound must be positive and finite, got {eb_abs!r}")
    if not np.isfinite(x).all():
        raise ValueError("cannot compress non-finite values")
    tokens, exceptions = kernels.encode_quanta(x, float(eb_abs))
    payload = b"".join(
        [_U64.pack(len(tokens)), tokens, _U64.pack(len(exceptions)), exceptions.astype("<f8").tobytes()]
    )
    flags = 0
    if lossless:
        payload = zlib.compress(payload, 9)
        flags |= FLAG_ZLIB
    return CompressedStream(PREDICTORS[predictor], x.shape[0], float(eb_abs), payload, flags)


def _split_payload(payload: bytes):
    if len(payload) < 8:
        raise CorruptDataError("truncated payload")
    (t_len,) = _U64.unpack_from(payload)
    off = 8 + t_len
    if len(payload) < off + 8:
        raise CorruptDataError("truncated payload")
    tokens = payload[8:off]
    (x_len,) = _U64.unpack_from(payload, off)
    off += 8
    if len(payload) != off + 8 * x_len:
        raise CorruptDataError("truncated payload" if len(payload) < off + 8 * x_len else "trailing payload bytes")
    exceptions = np.frombuffer(payload, dtype="<f8", count=x_len, offset=off).astype(np.float64)
    return tokens, exceptions


def decompress(stream) -> np.ndarray:
    """Decode a :class:`CompressedStream` or raw UMC1 bytes to float64 values."""
    if not isinstance(stream, CompressedStream):
        stream = CompressedStream.from_bytes(stream)
    payload = stream.payload
    if stream.flags & FLAG_ZLIB:
        try:
            payload = zlib.decompress(payload)
        except zlib.error as exc:
            raise CorruptDataError(f"corrupt deflated payload: {exc}") from None
    tokens, exceptions = _split_payload(payload)
    if not np.isfinite(exceptions).all():
        raise CorruptDataError("non-finite exception value")
    return kernels.decode_quanta(tokens, exceptions, stream.n, stream.eb_abs)


def relative_to_absolute_bound(values, tau_rel: float) -> float:
    """``tau_rel`` times the value range; ``tau_rel * max(1, |x0|)`` for a flat field."""
    x = _as_array(values)
    if x.shape[0] == 0:
        raise ValueError("cannot derive an error bound from an empty field")
    if not (math.isfinite(tau_rel) and tau_rel > 0):
        raise ValueError(f"relative tolerance must be positive, got {tau_rel!r}")
    span = float(x.max()) - float(x.min())
    if span == 0:
        return tau_rel * max(1.0, abs(float(x[0])))
    return tau_rel * span


# -- external compressor executables -------------------------------------------

def _render(template: str, **tokens) -> list:
    argv = shlex.split(template)
    if not argv:
        raise ExternalCodecError("external codec unavailable: empty command")
    out = []
    for arg in argv:
        for key, val in tokens.items():
            arg = arg.replace("{" + key + "}", val)
        out.append(arg)
    return out


def _run(template: str, in_path: str, out_path: str, tau_rel: float, n: int) -> None:
    argv = _render(template, **{"in": in_path, "out": out_path, "tol": repr(float(tau_rel)), "n": str(n)})
    if shutil.which(argv[0]) is None:
        raise ExternalCodecError(f"external codec unavailable: {argv[0]!r} not found")
    try:
        proc = subprocess.run(argv, capture_output=True)
    except OSError as exc:
        raise ExternalCodecError(f"external codec unavailable: {exc}") from None
    if proc.returncode != 0:
        msg = proc.stderr.decode(errors="replace").strip()
        raise ExternalCodecError(f"external codec exited with status {proc.returncode}: {msg}")
    if not os.path.exists(out_path):
        raise ExternalCodecError(f"external codec wrote no output to {out_path}")


def external_compress(cmd: str, values, tau_rel: float) -> bytes:
    """Run an external compressor on raw little-endian binary64 input.

    ``cmd`` is a shell-style template; ``{in}``, ``{out}``, ``{tol}`` and
    ``{n}`` are substituted in each argument. Scratch files go to
    ``$MESHSERIAL_TMPDIR`` when set. Returns the bytes the command wrote.
    """
    x = _as_array(values)
    with tempfile.TemporaryDirectory(dir=os.environ.get(TMPDIR_ENV)) as tmp:
        src, dst = os.path.join(tmp, "input.f64"), os.path.join(tmp, "output.bin")
        x.astype("<f8").tofile(src)
        _run(cmd, src, dst, tau_rel, x.shape[0])
        with open(dst, "rb") as f:
            return f.read()


def external_decompress(cmd: str, blob: bytes, n: int, tau_rel: float) -> np.ndarray:
    """Inverse of :func:`external_compress`; the command must emit ``8 * n`` bytes."""
    with tempfile.TemporaryDirectory(dir=os.environ.get(TMPDIR_ENV)) as tmp:
        src, dst = os.path.join(tmp, "input.bin"), os.path.join(tmp, "output.f64")
        with open(src, "wb") as f:
            f.write(blob)
        _run(cmd, src, dst, tau_rel, n)
        raw = np.fromfile(dst, dtype="<u1")
    if raw.shape[0] != 8 * n:
        raise ExternalCodecError(f"external decompressor produced {raw.shape[0]} bytes, expected {8 * n}")
    return raw.view("<f8").astype(np.float64)
