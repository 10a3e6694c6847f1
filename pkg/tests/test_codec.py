import struct
import sys

import numpy as np
import pytest
from hypothesis import given, settings, example
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from meshserial import (
    CompressedStream,
    CorruptDataError,
    ExternalCodecError,
    apply_permutation,
    compress,
    decompress,
    generate_structured,
    relative_to_absolute_bound,
    sample_field,
)
from meshserial.codec import external_compress, external_decompress
from meshserial.ordering import OrderingStrategy, order_nodes
from meshserial.graph import build_traversal_graph


def _umc1(n, eb, tokens, exceptions, predictor=0, flags=0):
    payload = struct.pack("<Q", len(tokens)) + bytes(tokens) + struct.pack("<Q", len(exceptions))
    payload += struct.pack(f"<{len(exceptions)}d", *exceptions)
    return b"UMC1" + struct.pack("<HBBQdQ", 1, predictor, flags, n, eb, len(payload)) + payload


def test_hand_encoded_stream():
    # first value raw; 0.5 -> q=1 (zigzag 2, token 3); two zeros (token 4); 1e300 overflows
    x = [0.0, 0.5, 0.5, 0.5, 1e300]
    assert compress(x, 0.25).to_bytes() == _umc1(5, 0.25, [0, 3, 4, 0], [0.0, 1e300])


def test_negative_quantum_on_the_bound():
    # residual -0.75 quantizes to -1 (token 1), landing exactly eb away
    data = compress([0.0, -0.75], 0.25).to_bytes()
    assert data == _umc1(2, 0.25, [0, 1], [0.0])
    assert decompress(data).tolist() == [0.0, -0.5]


def test_lorenzo1_id_in_header():
    s = compress([1.0, 2.0], 0.1, predictor="lorenzo1")
    assert s.to_bytes()[6] == 1
    assert s.payload == compress([1.0, 2.0], 0.1).payload


def test_constant_array():
    x = np.full(1000, 5.0)
    for eb in (1e-9, 1e-3, 0.3, 0.5, 10.0, 1e300):
        s = compress(x, eb)
        assert s.nbytes < 8000 // 10
        out = decompress(s.to_bytes())
        assert np.array_equal(out, x)


def test_empty_stream():
    s = compress([], 1e-3)
    assert s.n == 0
    out = decompress(s.to_bytes())
    assert out.shape == (0,)
    assert s.to_bytes() == _umc1(0, 1e-3, [], [])


def test_overflow_goes_to_exceptions():
    s = compress([0.0, 1e300], 1e-3)
    out = decompress(s)
    assert out[1] == 1e300
    assert s.to_bytes().endswith(struct.pack("<d", 1e300))


def test_zlib_post_stage():
    mesh = generate_structured(32, 32)
    x = sample_field(mesh, "sinprod").values
    plain, packed = compress(x, 1e-4), compress(x, 1e-4, lossless=True)
    assert packed.flags == 1
    assert np.array_equal(decompress(packed.to_bytes()), decompress(plain.to_bytes()))


def test_compress_argument_errors():
    with pytest.raises(ValueError):
        compress([1.0], 0.0)
    with pytest.raises(ValueError):
        compress([1.0], -1.0)
    with pytest.raises(ValueError):
        compress([1.0], float("nan"))
    with pytest.raises(ValueError):
        compress([1.0, float("inf")], 1.0)
    with pytest.raises(ValueError):
        compress([1.0], 1.0, predictor="spline")


def test_decompress_rejects_corruption():
    good = compress(np.linspace(0, 1, 50), 1e-4).to_bytes()
    with pytest.raises(CorruptDataError, match="bad magic"):
        decompress(b"UMC2" + good[4:])
    with pytest.raises(CorruptDataError, match="version"):
        decompress(good[:4] + b"\x07\x00" + good[6:])
    for cut in (1, 5, len(good) - 33, len(good) - 20):
        with pytest.raises(CorruptDataError):
            decompress(good[:-cut])
    with pytest.raises(CorruptDataError, match="count mismatch"):
        decompress(_umc1(5, 0.25, [0, 3, 4], [0.0]))
    with pytest.raises(CorruptDataError, match="more than n"):
        decompress(_umc1(2, 0.25, [8], []))
    with pytest.raises(CorruptDataError, match="exception"):
        decompress(_umc1(1, 0.25, [0], []))
    with pytest.raises(CorruptDataError, match="unused"):
        decompress(_umc1(1, 0.25, [2], [1.0]))
    with pytest.raises(CorruptDataError, match="truncated varint"):
        decompress(_umc1(1, 0.25, [0x81], []))
    with pytest.raises(CorruptDataError, match="overlong"):
        decompress(_umc1(1, 0.25, [0xFF] * 10 + [1], []))


def _check_bound(x, eb):
    out = decompress(compress(x, eb).to_bytes())
    assert out.shape == x.shape
    if x.size:
        assert np.max(np.abs(out - x)) <= eb


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=300, deadline=None)
@given(hnp.arrays(np.float64, st.integers(0, 300), elements=finite),
       st.floats(min_value=1e-300, max_value=1e300))
def test_error_bound_arbitrary(x, eb):
    _check_bound(x, eb)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-50, 50), max_size=200), st.sampled_from([0.1, 0.25, 1e-3, 0.3, 1 / 3]))
@example([1, -1, 3, -3, 1], 0.25)
def test_error_bound_on_quantization_ties(ks, eb):
    # odd multiples of eb sit exactly between two reconstruction levels
    x = np.array(ks, dtype=np.float64) * eb
    _check_bound(x, eb)


def test_deterministic_bytes():
    rng = np.random.default_rng(3)
    x = rng.normal(size=5000)
    assert compress(x, 1e-3).to_bytes() == compress(x.copy(), 1e-3).to_bytes()


def test_relative_to_absolute_bound():
    assert relative_to_absolute_bound([0.0, 0.3, 1.0], 1e-3) == 1e-3
    assert relative_to_absolute_bound([7.0], 1e-2) == pytest.approx(0.07)
    assert relative_to_absolute_bound([0.0, 0.0], 0.5) == 0.5
    assert relative_to_absolute_bound([-2.0, 2.0], 0.5) == 2.0
    with pytest.raises(ValueError):
        relative_to_absolute_bound([], 1e-3)
    with pytest.raises(ValueError):
        relative_to_absolute_bound([1.0], 0.0)


def test_payload_shrinks_with_looser_bound():
    x = sample_field(generate_structured(64, 64), "sinprod").values
    assert compress(x, 1e-3).nbytes < compress(x, 1e-5).nbytes


def test_random_order_compresses_worse():
    mesh = generate_structured(64, 64)
    g = build_traversal_graph(mesh)
    x = sample_field(mesh, "sinprod").values
    shuffled = apply_permutation(x, order_nodes(OrderingStrategy("random", 8), g))
    for eb in (1e-3, 1e-4, 1e-5):
        assert compress(shuffled, eb).nbytes >= compress(x, eb).nbytes


def test_from_bytes_fields():
    s = CompressedStream.from_bytes(compress([1.0, 2.0, 3.0], 0.5).to_bytes())
    assert (s.n, s.eb_abs, s.predictor, s.flags) == (3, 0.5, 0, 0)


# -- external adapter ---------------------------------------------------------

def test_external_missing_executable():
    with pytest.raises(ExternalCodecError, match="external codec unavailable"):
        external_compress("definitely-not-a-codec-xyz {in} {out}", [1.0], 1e-3)


def test_external_identity_copy():
    x = np.array([1.0, -2.5, 3e10])
    blob = external_compress("cp {in} {out}", x, 1e-3)
    assert blob == x.astype("<f8").tobytes()
    assert len(blob) / (8 * x.size) == 1.0
    back = external_decompress("cp {in} {out}", blob, 3, 1e-3)
    assert back.tobytes() == x.tobytes()


def test_external_tokens_and_failures(tmp_path, monkeypatch):
    monkeypatch.setenv("MESHSERIAL_TMPDIR", str(tmp_path))
    script = f"{sys.executable} -c \"import sys; open(sys.argv[2],'w').write(sys.argv[3]+' '+sys.argv[4])\" {{in}} {{out}} {{tol}} {{n}}"
    assert external_compress(script, np.zeros(7), 0.001) == b"0.001 7"
    with pytest.raises(ExternalCodecError, match="status 3"):
        external_compress(f"{sys.executable} -c \"import sys; sys.exit(3)\"", [1.0], 1e-3)
    with pytest.raises(ExternalCodecError, match="expected 16"):
        external_decompress("cp {in} {out}", b"\x00" * 8, 2, 1e-3)
