"""Command-line interface.

Exit codes: 0 ok, 1 I/O or parse failure, 2 bad arguments or validation
failure, 3 corrupt data.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys

import numpy as np

from . import __version__
from ._backend import BACKEND
from .codec import (
    CompressedStream,
    compress,
    decompress,
    external_compress,
    external_decompress,
    relative_to_absolute_bound,
)
from .errors import CorruptDataError, ExternalCodecError, MeshParseError
from .graph import build_traversal_graph, component_count
from .mesh import (
    FIELD_EXPRESSIONS,
    FieldData,
    generate_structured,
    load_field,
    load_mesh,
    sample_field,
    save_field,
    save_mesh,
    shuffle_node_labels,
)
from .metrics import emit_report, emit_summary, improvement_table
from .ordering import OrderingStrategy, minla_cost, order_nodes
from .permute import Permutation, apply_permutation, invert_permutation, load_permutation, save_permutation
from .pipeline import ExternalCodec, check_codec_ids, run_bench

EXIT_OK, EXIT_IO, EXIT_ARGS, EXIT_CORRUPT = 0, 1, 2, 3

log = logging.getLogger("meshserial")

_GRID = re.compile(r"^grid:(\d+)x(\d+)(?::(quad|tri))?$")


class UsageError(ValueError):
    pass


def _mesh_arg(text: str):
    """A mesh file path, or ``grid:NXxNY[:quad|tri]`` for a generated grid."""
    m = _GRID.match(text)
    if m:
        return generate_structured(int(m.group(1)), int(m.group(2)), m.group(3) or "quad")
    return load_mesh(text)


def _csv_list(text: str) -> list:
    return [t.strip() for t in text.split(",") if t.strip()]


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _external(args):
    c, d = getattr(args, "ext_compress", None), getattr(args, "ext_decompress", None)
    if (c is None) != (d is None):
        raise UsageError("--ext-compress and --ext-decompress go together")
    return ExternalCodec(c, d) if c else None


def cmd_gen_mesh(args) -> int:
    mesh = generate_structured(args.nx, args.ny, args.kind)
    if args.shuffle_seed is not None:
        mesh, _ = shuffle_node_labels(mesh, args.shuffle_seed)
    save_mesh(args.out, mesh)
    print(f"wrote {args.out}: {mesh.n_nodes} nodes, {len(mesh.elements)} elements")
    return EXIT_OK


def cmd_sample_field(args) -> int:
    mesh = _mesh_arg(args.mesh)
    field = sample_field(mesh, args.expr)
    save_field(args.out, field)
    print(f"wrote {args.out}: {len(field)} values of {args.expr}")
    return EXIT_OK


def cmd_order(args) -> int:
    mesh = _mesh_arg(args.mesh)
    strategy = OrderingStrategy.parse(args.strategy, default_seed=args.seed)
    graph = build_traversal_graph(mesh)
    if mesh.n_nodes and not 0 <= args.start < mesh.n_nodes:
        raise UsageError(f"--start {args.start} out of range [0, {mesh.n_nodes})")
    perm = order_nodes(strategy, graph, mesh.coords, start=args.start)
    save_permutation(args.out, perm)
    cost = minla_cost(graph, perm)
    base = minla_cost(graph, Permutation.identity(mesh.n_nodes))
    print(f"n={mesh.n_nodes} components={component_count(graph)} strategy={strategy} "
          f"minla={cost} identity_minla={base}")
    return EXIT_OK


def cmd_compress(args) -> int:
    field = load_field(args.field)
    perm = load_permutation(args.perm)
    if len(field) != len(perm):
        raise UsageError(f"field has {len(field)} values but permutation has {len(perm)} entries")
    external = _external(args)
    check_codec_ids([args.codec], external)
    serialized = apply_permutation(field.values, perm)
    sidecar = {"tau_rel": args.tau, "codec": args.codec, "perm_file": os.path.abspath(args.perm),
               "n": len(field)}
    if len(field):
        eb = relative_to_absolute_bound(serialized, args.tau)
    else:
        eb = args.tau
    sidecar["eb_abs"] = eb
    if external is not None and args.codec == external.name:
        blob = external_compress(external.compress_cmd, serialized, args.tau)
        sidecar["ext_decompress"] = external.decompress_cmd
    else:
        predictor, _, post = args.codec.partition("+")
        blob = compress(serialized, eb, predictor, lossless=post == "zlib").to_bytes()
    with open(args.out, "wb") as f:
        f.write(blob)
    with open(args.out + ".json", "w", encoding="utf-8") as f:
        json.dump(sidecar, f, indent=1, sort_keys=True)
        f.write("\n")
    print(f"wrote {args.out}: {len(blob)} bytes from {8 * len(field)} (eb_abs={eb:.6g})")
    return EXIT_OK


def cmd_decompress(args) -> int:
    perm = load_permutation(args.perm)
    with open(args.stream, "rb") as f:
        blob = f.read()
    sidecar_path = args.stream + ".json"
    sidecar = {}
    if os.path.exists(sidecar_path):
        with open(sidecar_path, encoding="utf-8") as f:
            sidecar = json.load(f)
    if "ext_decompress" in sidecar:
        n = int(sidecar["n"])
        if n != len(perm):
            raise CorruptDataError(f"stream holds {n} values but permutation has {len(perm)} entries")
        values = external_decompress(sidecar["ext_decompress"], blob, n, float(sidecar["tau_rel"]))
    else:
        stream = CompressedStream.from_bytes(blob)
        if stream.n != len(perm):
            raise CorruptDataError(f"stream holds {stream.n} values but permutation has {len(perm)} entries")
        values = decompress(stream)
    restored = apply_permutation(values, invert_permutation(perm))
    save_field(args.out, FieldData(restored))
    print(f"wrote {args.out}: {len(restored)} values")
    return EXIT_OK


def cmd_bench(args) -> int:
    mesh = _mesh_arg(args.mesh)
    relabel = None
    if args.shuffle_seed is not None:
        mesh, relabel = shuffle_node_labels(mesh, args.shuffle_seed)
    fields = []
    for item in _csv_list(args.fields):
        name, sep, path = item.partition("=")
        if sep:
            field = load_field(path, name)
            if len(field) != mesh.n_nodes:
                raise UsageError(f"field {name!r} has {len(field)} values, mesh has {mesh.n_nodes} nodes")
            # file values follow the original labels
            fields.append(apply_permutation(field, relabel) if relabel is not None else field)
        elif item in FIELD_EXPRESSIONS:
            fields.append(sample_field(mesh, item))
        else:
            raise UsageError(f"unknown field {item!r}: use one of {sorted(FIELD_EXPRESSIONS)} or NAME=PATH")
    strategies = [OrderingStrategy.parse(s, default_seed=args.seed) for s in _csv_list(args.strategies)]
    try:
        taus = [float(t) for t in _csv_list(args.taus)]
    except ValueError:
        raise UsageError(f"bad --taus {args.taus!r}") from None
    if not taus or any(not (t > 0) for t in taus):
        raise UsageError("--taus must be positive")
    report = run_bench(mesh, fields, strategies, taus, _csv_list(args.codecs),
                       start=args.start, timing=args.timing, external=_external(args))
    fmt = args.format or ("json" if args.report and args.report.endswith(".json") else "csv")
    text = emit_report(report, fmt)
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    summary = emit_summary(improvement_table(report, baseline=args.baseline))
    if args.summary:
        with open(args.summary, "w", encoding="utf-8", newline="") as f:
            f.write(summary)
    if args.report or args.summary:
        sys.stdout.write(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meshserial", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-mesh", help="write a structured unit-square mesh")
    g.add_argument("nx", type=int)
    g.add_argument("ny", type=int)
    g.add_argument("--kind", choices=("quad", "tri"), default="quad")
    g.add_argument("--shuffle-seed", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_mesh)

    s = sub.add_parser("sample-field", help="evaluate a synthetic field at the mesh nodes")
    s.add_argument("mesh")
    s.add_argument("--expr", choices=sorted(FIELD_EXPRESSIONS), default="sinprod")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample_field)

    o = sub.add_parser("order", help="compute a node order and write it as a UMRP file")
    o.add_argument("mesh")
    o.add_argument("--strategy", default="greedy", help="identity, random[:SEED], greedy[:nearest], bfs or rcm")
    o.add_argument("--start", type=int, default=0, help="greedy start node")
    o.add_argument("--seed", type=int, default=0, help="seed for a bare 'random'")
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_order)

    def ext_flags(sp):
        sp.add_argument("--ext-compress", help="external compressor template with {in} {out} {tol} {n}")
        sp.add_argument("--ext-decompress", help="external decompressor template")

    c = sub.add_parser("compress", help="serialize a field along a permutation and compress it")
    c.add_argument("field")
    c.add_argument("perm")
    c.add_argument("--tau", type=_positive_float, required=True, help="relative tolerance")
    c.add_argument("--codec", default="delta", help="delta, lorenzo1, delta+zlib, ... or external")
    c.add_argument("--out", required=True)
    ext_flags(c)
    c.set_defaults(func=cmd_compress)

    d = sub.add_parser("decompress", help="decompress and restore original node order")
    d.add_argument("stream")
    d.add_argument("perm")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_decompress)

    b = sub.add_parser("bench", help="cross-product evaluation of orders, tolerances and codecs")
    b.add_argument("mesh")
    b.add_argument("--fields", default="sinprod")
    b.add_argument("--strategies", default="identity,greedy")
    b.add_argument("--taus", default="1e-3,1e-4,1e-5")
    b.add_argument("--codecs", default="delta")
    b.add_argument("--baseline", default="identity", help="strategy the improvement column divides by")
    b.add_argument("--shuffle-seed", type=int, help="relabel mesh nodes randomly before evaluation")
    b.add_argument("--seed", type=int, default=0, help="seed for a bare 'random' strategy")
    b.add_argument("--start", type=int, default=0)
    b.add_argument("--timing", action="store_true", help="record wall times (reports stop being reproducible)")
    b.add_argument("--format", choices=("csv", "json"))
    b.add_argument("--report")
    b.add_argument("--summary", help="write the improvement table here")
    ext_flags(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CorruptDataError as exc:
        print(f"error: corrupt data: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except (MeshParseError, OSError, ExternalCodecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
