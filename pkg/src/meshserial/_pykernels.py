"""Pure-Python hot loops. Loaded when the compiled ``_kernels`` is absent.

Every function here has a twin in ``_kernels.pyx`` that performs the same
floating-point operations in the same order, so both backends produce
bit-identical orders and streams.
"""

import math

import numpy as np

from .errors import CorruptDataError

# Largest quantum magnitude stored inline; anything larger becomes an exception.
QMAX = float(1 << 61)
MAX_VARINT_BYTES = 9


def _nearest_unvisited(coords, visited_mask, u):
    diff = coords - coords[u]
    d = np.zeros(coords.shape[0])
    for c in range(coords.shape[1]):
        d = d + diff[:, c] * diff[:, c]
    d[visited_mask] = np.inf
    return int(np.argmin(d))


def greedy_walk(indptr, indices, coords, start, jump_nearest=False):
    n = len(indptr) - 1
    visited_mask = np.zeros(n, dtype=bool) if jump_nearest else None
    indptr = indptr.tolist()
    indices = indices.tolist()
    pts = coords.tolist()
    visited = bytearray(n)
    order = [0] * n
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    u = start
    visited[u] = 1
    order[0] = u
    next_free = 0
    for pos in range(1, n):
        pu = pts[u]
        best = -1
        best_d = math.inf
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if visited[v]:
                continue
            pv = pts[v]
            d = 0.0
            for c in range(len(pu)):
                t = pv[c] - pu[c]
                d += t * t
            # neighbors ascend by id, so strict < keeps the smallest id on ties
            if d < best_d:
                best_d = d
                best = v
        if best < 0:
            if jump_nearest:
                visited_mask[order[:pos]] = True
                best = _nearest_unvisited(coords, visited_mask, u)
            else:
                while visited[next_free]:
                    next_free += 1
                best = next_free
        visited[best] = 1
        order[pos] = best
        u = best
    return np.array(order, dtype=np.int64)


def _put_varint(out, value):
    while value >= 0x80:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    out.append(value)


def encode_quanta(values, eb):
    """Quantize ``values`` against reconstruction-based delta prediction.

    The first value is always an exception. Returns ``(tokens, exceptions)``.
    Token stream, unsigned LEB128 varints: ``0`` exception (next raw value),
    ``2k`` run of k zero quanta, ``2z - 1`` one nonzero quantum with zigzag
    code ``z``.
    """
    step = 2.0 * eb
    out = bytearray()
    exceptions = []
    pred = 0.0
    run = 0
    first = True
    for x in values.tolist():
        t = (x - pred) / step
        qd = 0.0
        ok = False
        # the first value has no predecessor and is always stored raw
        if first:
            first = False
        elif abs(t) <= QMAX:
            qd = float(math.floor(t + 0.5))
            if qd == 0.0:
                recon = pred
            else:
                recon = pred + step * qd
            ok = abs(recon - x) <= eb
        if ok and qd == 0.0:
            run += 1
            continue
        if run:
            _put_varint(out, 2 * run)
            run = 0
        if ok:
            q = int(qd)
            zz = (q << 1) if q >= 0 else ((-q << 1) - 1)
            _put_varint(out, 2 * zz - 1)
            pred = recon
        else:
            out.append(0)
            exceptions.append(x)
            pred = x
    if run:
        _put_varint(out, 2 * run)
    return bytes(out), np.array(exceptions, dtype=np.float64)


def decode_quanta(tokens, exceptions, n, eb):
    step = 2.0 * eb
    exc = exceptions.tolist()
    out = [0.0] * n
    pred = 0.0
    i = 0
    j = 0
    pos = 0
    end = len(tokens)
    while pos < end:
        t = 0
        shift = 0
        while True:
            if pos >= end:
                raise CorruptDataError("truncated varint in token stream")
            if shift >= 7 * MAX_VARINT_BYTES:
                raise CorruptDataError("overlong varint in token stream")
            b = tokens[pos]
            pos += 1
            t |= (b & 0x7F) << shift
            shift += 7
            if b < 0x80:
                break
        if t == 0:
            if j >= len(exc):
                raise CorruptDataError("more exception markers than stored exceptions")
            if i >= n:
                raise CorruptDataError("token stream decodes to more than n values")
            pred = exc[j]
            j += 1
            out[i] = pred
            i += 1
        elif t & 1 == 0:
            k = t >> 1
            if k > n - i:
                raise CorruptDataError("token stream decodes to more than n values")
            for m in range(i, i + k):
                out[m] = pred
            i += k
        else:
            if i >= n:
                raise CorruptDataError("token stream decodes to more than n values")
            zz = (t + 1) >> 1
            q = (zz >> 1) if zz & 1 == 0 else -((zz + 1) >> 1)
            pred = pred + step * float(q)
            out[i] = pred
            i += 1
    if i != n:
        raise CorruptDataError(f"quanta count mismatch: decoded {i} of {n} values")
    if j != len(exc):
        raise CorruptDataError(f"{len(exc) - j} unused exception values")
    return np.array(out, dtype=np.float64)
