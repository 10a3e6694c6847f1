"""The compiled and pure-Python kernels must agree bit for bit."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from meshserial import _backend, build_traversal_graph, generate_structured, sample_field
from meshserial.mesh import shuffle_node_labels

needs_ext = pytest.mark.skipif(_backend.compiled_kernels is None, reason="compiled kernels not built")
PY = _backend.python_kernels
EXT = _backend.compiled_kernels


def _walk_inputs(nx, ny, kind, seed):
    mesh, _ = shuffle_node_labels(generate_structured(nx, ny, kind), seed)
    g = build_traversal_graph(mesh)
    return g.indptr, g.indices, np.ascontiguousarray(mesh.coords)


@needs_ext
@pytest.mark.parametrize("jump", [False, True])
@pytest.mark.parametrize("nx, ny, kind, seed", [(1, 1, "quad", 0), (30, 20, "quad", 4), (25, 25, "tri", 9)])
def test_greedy_walk_agrees(nx, ny, kind, seed, jump):
    ip, ix, xy = _walk_inputs(nx, ny, kind, seed)
    for start in (0, len(ip) - 2):
        assert np.array_equal(PY.greedy_walk(ip, ix, xy, start, jump), EXT.greedy_walk(ip, ix, xy, start, jump))


def test_greedy_walk_empty(kern):
    out = kern.greedy_walk(np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros((0, 2)), 0)
    assert out.shape == (0,)


finite = st.floats(allow_nan=False, allow_infinity=False)


@needs_ext
@settings(max_examples=200, deadline=None)
@given(hnp.arrays(np.float64, st.integers(0, 200), elements=finite),
       st.floats(min_value=1e-300, max_value=1e300))
def test_codec_kernels_agree(x, eb):
    tp, ep = PY.encode_quanta(x, eb)
    tc, ec = EXT.encode_quanta(x, eb)
    assert tp == tc
    assert ep.tobytes() == ec.tobytes()
    assert PY.decode_quanta(tp, ep, x.size, eb).tobytes() == EXT.decode_quanta(tc, ec, x.size, eb).tobytes()


@needs_ext
def test_codec_kernels_agree_on_smooth_field():
    x = sample_field(generate_structured(100, 100), "radial").values
    for eb in (1e-2, 1e-4, 1e-6, 1e-9):
        tp, ep = PY.encode_quanta(x, eb)
        tc, ec = EXT.encode_quanta(x, eb)
        assert tp == tc and ep.tobytes() == ec.tobytes()


def test_backend_selected():
    assert _backend.BACKEND in ("cython", "python")
    assert _backend.kernels is (EXT if EXT is not None else PY)
