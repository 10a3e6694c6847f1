# Compiled twins of the loops in _pykernels.py. Keep the floating-point
# operation order identical to the Python versions.

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs, INFINITY
from libc.stdint cimport int64_t, uint64_t, uint8_t

from .errors import CorruptDataError

cnp.import_array()

cdef double QMAX = <double>(1ULL << 61)
cdef int MAX_VARINT_BYTES = 9


def greedy_walk(const int64_t[::1] indptr, const int64_t[::1] indices,
                const double[:, ::1] coords, int64_t start, bint jump_nearest=False):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t dim = coords.shape[1]
    cdef cnp.ndarray[int64_t, ndim=1] order_arr = np.zeros(n, dtype=np.int64)
    if n == 0:
        return order_arr
    cdef int64_t[::1] order = order_arr
    cdef uint8_t[::1] visited = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t pos, k, c, next_free = 0
    cdef int64_t u = start, v, best
    cdef double d, t, best_d
    with nogil:
        visited[u] = 1
        order[0] = u
        for pos in range(1, n):
            best = -1
            best_d = INFINITY
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if visited[v]:
                    continue
                d = 0.0
                for c in range(dim):
                    t = coords[v, c] - coords[u, c]
                    d = d + t * t
                if d < best_d:
                    best_d = d
                    best = v
            if best < 0:
                if jump_nearest:
                    # O(n) scan; ascending v keeps the smallest id on ties
                    for v in range(n):
                        if visited[v]:
                            continue
                        d = 0.0
                        for c in range(dim):
                            t = coords[v, c] - coords[u, c]
                            d = d + t * t
                        if d < best_d:
                            best_d = d
                            best = v
                else:
                    while visited[next_free]:
                        next_free += 1
                    best = next_free
            visited[best] = 1
            order[pos] = best
            u = best
    return order_arr


cdef inline Py_ssize_t _put_varint(uint8_t* out, Py_ssize_t pos, uint64_t value) noexcept nogil:
    while value >= 0x80:
        out[pos] = <uint8_t>((value & 0x7F) | 0x80)
        pos += 1
        value >>= 7
    out[pos] = <uint8_t>value
    return pos + 1


def encode_quanta(const double[::1] values, double eb):
    cdef Py_ssize_t n = values.shape[0]
    cdef cnp.ndarray[uint8_t, ndim=1] buf_arr = np.empty(MAX_VARINT_BYTES * n + MAX_VARINT_BYTES, dtype=np.uint8)
    cdef cnp.ndarray[double, ndim=1] exc_arr = np.empty(n, dtype=np.float64)
    cdef uint8_t* buf = <uint8_t*>buf_arr.data
    cdef double* exc = <double*>exc_arr.data
    cdef double step = 2.0 * eb
    cdef double pred = 0.0, recon = 0.0, x, t, qd
    cdef Py_ssize_t i, pos = 0, n_exc = 0
    cdef uint64_t run = 0, zz
    cdef int64_t q
    cdef bint ok
    with nogil:
        for i in range(n):
            x = values[i]
            t = (x - pred) / step
            qd = 0.0
            ok = False
            if i > 0 and fabs(t) <= QMAX:
                qd = floor(t + 0.5)
                if qd == 0.0:
                    recon = pred
                else:
                    recon = pred + step * qd
                ok = fabs(recon - x) <= eb
            if ok and qd == 0.0:
                run += 1
                continue
            if run:
                pos = _put_varint(buf, pos, 2 * run)
                run = 0
            if ok:
                q = <int64_t>qd
                if q >= 0:
                    zz = (<uint64_t>q) << 1
                else:
                    zz = ((<uint64_t>(-q)) << 1) - 1
                pos = _put_varint(buf, pos, 2 * zz - 1)
                pred = recon
            else:
                buf[pos] = 0
                pos += 1
                exc[n_exc] = x
                n_exc += 1
                pred = x
        if run:
            pos = _put_varint(buf, pos, 2 * run)
    return buf_arr[:pos].tobytes(), exc_arr[:n_exc].copy()


def decode_quanta(const uint8_t[::1] tokens, const double[::1] exceptions, Py_ssize_t n, double eb):
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(n, dtype=np.float64)
    cdef double* out = <double*>out_arr.data
    cdef double step = 2.0 * eb
    cdef double pred = 0.0
    cdef Py_ssize_t i = 0, j = 0, pos = 0, m
    cdef Py_ssize_t end = tokens.shape[0], n_exc = exceptions.shape[0]
    cdef uint64_t t, k, zz
    cdef int64_t q
    cdef int shift
    cdef uint8_t b
    cdef int err = 0
    with nogil:
        while pos < end:
            t = 0
            shift = 0
            while True:
                if pos >= end:
                    err = 1
                    break
                if shift >= 7 * MAX_VARINT_BYTES:
                    err = 2
                    break
                b = tokens[pos]
                pos += 1
                t |= (<uint64_t>(b & 0x7F)) << shift
                shift += 7
                if b < 0x80:
                    break
            if err:
                break
            if t == 0:
                if j >= n_exc:
                    err = 3
                    break
                if i >= n:
                    err = 4
                    break
                pred = exceptions[j]
                j += 1
                out[i] = pred
                i += 1
            elif (t & 1) == 0:
                k = t >> 1
                if k > <uint64_t>(n - i):
                    err = 4
                    break
                for m in range(i, i + <Py_ssize_t>k):
                    out[m] = pred
                i += <Py_ssize_t>k
            else:
                if i >= n:
                    err = 4
                    break
                zz = (t + 1) >> 1
                if (zz & 1) == 0:
                    q = <int64_t>(zz >> 1)
                else:
                    q = -<int64_t>((zz + 1) >> 1)
                pred = pred + step * <double>q
                out[i] = pred
                i += 1
    if err == 1:
        raise CorruptDataError("truncated varint in token stream")
    if err == 2:
        raise CorruptDataError("overlong varint in token stream")
    if err == 3:
        raise CorruptDataError("more exception markers than stored exceptions")
    if err == 4:
        raise CorruptDataError("token stream decodes to more than n values")
    if i != n:
        raise CorruptDataError(f"quanta count mismatch: decoded {i} of {n} values")
    if j != n_exc:
        raise CorruptDataError(f"{n_exc - j} unused exception values")
    return out_arr
