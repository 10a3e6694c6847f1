"""End-to-end evaluation: order, permute, compress, decompress, un-permute, measure."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from . import codec as _codec
from .graph import Graph, build_traversal_graph
from .mesh import Mesh, validate_field
from .metrics import EvalReport, EvalRow, compression_ratio, l2_error_info, raw_size
from .ordering import OrderingStrategy, minla_cost, order_nodes
from .permute import apply_permutation, invert_permutation, write_permutation

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExternalCodec:
    """Command templates for an external compressor (see :func:`codec.external_compress`)."""

    compress_cmd: str
    decompress_cmd: str
    name: str = "external"


def _builtin(codec_id: str):
    predictor, _, post = codec_id.partition("+")
    if predictor not in _codec.PREDICTORS or post not in ("", "zlib"):
        return None
    return predictor, post == "zlib"


def check_codec_ids(codec_ids, external: ExternalCodec | None = None) -> None:
    for cid in codec_ids:
        if _builtin(cid) is None and not (external is not None and cid == external.name):
            raise ValueError(f"unknown codec {cid!r}")


def roundtrip(values: np.ndarray, tau_rel: float, codec_id: str, external: ExternalCodec | None = None):
    """Compress and decompress one serialized array; returns ``(nbytes, eb_abs, decoded)``."""
    eb = _codec.relative_to_absolute_bound(values, tau_rel)
    parsed = _builtin(codec_id)
    if parsed is not None:
        predictor, lossless = parsed
        blob = _codec.compress(values, eb, predictor, lossless=lossless).to_bytes()
        decoded = _codec.decompress(blob)
        worst = float(np.max(np.abs(decoded - values))) if values.size else 0.0
        if not worst <= eb:
            raise RuntimeError(f"codec {codec_id} broke its bound: {worst!r} > {eb!r}")
        return len(blob), eb, decoded
    if external is None or codec_id != external.name:
        raise ValueError(f"unknown codec {codec_id!r}")
    blob = _codec.external_compress(external.compress_cmd, values, tau_rel)
    decoded = _codec.external_decompress(external.decompress_cmd, blob, values.shape[0], tau_rel)
    return len(blob), eb, decoded


def run_bench(
    mesh: Mesh,
    fields: list,
    strategies: list,
    taus: list,
    codecs: list,
    start: int = 0,
    timing: bool = False,
    external: ExternalCodec | None = None,
    graph: Graph | None = None,
) -> EvalReport:
    """Evaluate every (field, strategy, tau, codec) cell.

    Wall times are only recorded with ``timing=True`` so that default reports
    are reproducible byte for byte. Rows come back sorted.
    """
    check_codec_ids(codecs, external)
    for f in fields:
        validate_field(mesh, f)
    graph = graph if graph is not None else build_traversal_graph(mesh)
    n = mesh.n_nodes
    rows = []
    for strat in strategies:
        if not isinstance(strat, OrderingStrategy):
            strat = OrderingStrategy.parse(strat)
        perm = order_nodes(strat, graph, mesh.coords, start=start)
        cost = minla_cost(graph, perm)
        inverse = invert_permutation(perm)
        meta = 0 if strat.kind == "identity" else len(write_permutation(perm))
        meta_share = math.ceil(meta / max(1, len(fields)))
        for f in fields:
            serialized = apply_permutation(f.values, perm)
            for tau in taus:
                for cid in codecs:
                    t0 = time.perf_counter()
                    nbytes, eb, decoded = roundtrip(serialized, tau, cid, external)
                    restored = apply_permutation(decoded, inverse)
                    ms = (time.perf_counter() - t0) * 1e3 if timing else 0.0
                    eps, zero = l2_error_info(f.values, restored)
                    if zero:
                        log.warning("field %s is identically zero; epsilon is an absolute norm", f.name)
                    orig = raw_size(n)
                    rows.append(EvalRow(
                        variable=f.name, strategy=str(strat), codec=cid, tau_rel=float(tau),
                        eb_abs=float(eb), orig_bytes=orig, comp_bytes=nbytes,
                        cr=compression_ratio(orig, nbytes), epsilon=eps, minla_cost=cost,
                        ms=ms, meta_bytes=meta_share, zero_norm=zero,
                    ))
    return EvalReport(rows).sorted()

