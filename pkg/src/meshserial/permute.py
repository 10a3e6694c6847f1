"""Node permutations and the UMRP order-mapping file.

A :class:`Permutation` stores ``order`` with ``order[i]`` the original node id
placed at serialized position ``i``. It is the only metadata needed to undo
a reordering.

UMRP layout (all little-endian)::

    offset  size  field
    0       4     magic b"UMRP"
    4       2     u16 version (1)
    6       2     u16 reserved (0)
    8       8     u64 n
    16      8*n   u64 order[0..n)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptDataError

UMRP_MAGIC = b"UMRP"
UMRP_VERSION = 1
_HEADER = struct.Struct("<4sHHQ")


def _is_bijection(order: np.ndarray) -> bool:
    n = order.shape[0]
    if n == 0:
        return True
    if order.min() < 0 or order.max() >= n:
        return False
    seen = np.zeros(n, dtype=bool)
    seen[order] = True
    return bool(seen.all())


@dataclass(frozen=True, eq=False)
class Permutation:
    order: np.ndarray

    def __post_init__(self):
        order = np.array(self.order, dtype=np.int64, copy=True).reshape(-1)
        if not _is_bijection(order):
            raise ValueError("not a bijection")
        order.setflags(write=False)
        object.__setattr__(self, "order", order)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n, dtype=np.int64))

    def __len__(self) -> int:
        return self.order.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self.order, other.order)

    def __repr__(self):
        return f"Permutation(n={len(self)}, order={self.order[:8].tolist()}{'...' if len(self) > 8 else ''})"

    def positions(self) -> np.ndarray:
        """Serialized position of every original node id."""
        return invert_permutation(self).order


def apply_permutation(values, perm: Permutation) -> np.ndarray:
    """Lay values out in serialized order: ``out[i] = values[perm.order[i]]``.

    Accepts a plain array or anything with a ``values`` attribute (FieldData)
    and returns an object of the same kind.
    """
    from .mesh import FieldData

    if isinstance(values, FieldData):
        return FieldData(apply_permutation(values.values, perm), values.name)
    arr = np.asarray(values)
    if arr.shape[0] != len(perm):
        raise ValueError(
            f"length mismatch: {arr.shape[0]} values, permutation of {len(perm)}"
        )
    return arr[perm.order]


def invert_permutation(perm: Permutation) -> Permutation:
    inv = np.empty(len(perm), dtype=np.int64)
    inv[perm.order] = np.arange(len(perm), dtype=np.int64)
    return Permutation(inv)


def write_permutation(perm: Permutation) -> bytes:
    header = _HEADER.pack(UMRP_MAGIC, UMRP_VERSION, 0, len(perm))
    return header + perm.order.astype("<u8").tobytes()


def read_permutation(data: bytes) -> Permutation:
    data = bytes(data)
    if len(data) < 4 or data[:4] != UMRP_MAGIC:
        raise CorruptDataError("bad magic")
    if len(data) < _HEADER.size:
        raise CorruptDataError("truncated header")
    _, version, reserved, n = _HEADER.unpack_from(data)
    if version != UMRP_VERSION:
        raise CorruptDataError(f"unsupported version {version}")
    if reserved != 0:
        raise CorruptDataError("nonzero reserved field")
    expected = _HEADER.size + 8 * n
    if len(data) < expected:
        raise CorruptDataError(f"truncated payload: need {expected} bytes, have {len(data)}")
    if len(data) > expected:
        raise CorruptDataError(f"{len(data) - expected} trailing bytes")
    raw = np.frombuffer(data, dtype="<u8", count=n, offset=_HEADER.size)
    if n and raw.max() >= n:
        raise CorruptDataError("not a bijection")
    order = raw.astype(np.int64)
    if not _is_bijection(order):
        raise CorruptDataError("not a bijection")
    return Permutation(order)


def save_permutation(path, perm: Permutation) -> None:
    with open(path, "wb") as f:
        f.write(write_permutation(perm))


def load_permutation(path) -> Permutation:
    with open(path, "rb") as f:
        return read_permutation(f.read())
