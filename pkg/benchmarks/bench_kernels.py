"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--grid 256] [--repeat 3]
"""

import argparse
import time

import numpy as np

from meshserial import _backend, build_traversal_graph, generate_structured, sample_field
from meshserial.codec import relative_to_absolute_bound
from meshserial.mesh import shuffle_node_labels


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=256, help="cells per side of the quad mesh")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--tau", type=float, default=1e-4)
    args = ap.parse_args(argv)

    mesh, _ = shuffle_node_labels(generate_structured(args.grid, args.grid), 0)
    g = build_traversal_graph(mesh)
    coords = np.ascontiguousarray(mesh.coords)
    x = sample_field(mesh, "sinprod").values
    eb = relative_to_absolute_bound(x, args.tau)

    backends = [("python", _backend.python_kernels)]
    if _backend.compiled_kernels is not None:
        backends.append(("cython", _backend.compiled_kernels))
    else:
        print("compiled kernels unavailable; timing the fallback only")

    cases = {
        "greedy_walk": lambda k: k.greedy_walk(g.indptr, g.indices, coords, 0, False),
        "greedy_walk (nearest jump)": lambda k: k.greedy_walk(g.indptr, g.indices, coords, 0, True),
        "encode_quanta": lambda k: k.encode_quanta(x, eb),
    }
    tokens, exc = _backend.python_kernels.encode_quanta(x, eb)
    cases["decode_quanta"] = lambda k: k.decode_quanta(tokens, exc, x.size, eb)

    print(f"{mesh.n_nodes} nodes, {g.n_edges} edges, eb={eb:.3g}, best of {args.repeat}\n")
    header = f"{'kernel':<28}" + "".join(f"{name + ' [s]':>14}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, fn in cases.items():
        times, outs = [], []
        reps = 1 if label.endswith("(nearest jump)") and args.grid > 128 else args.repeat
        for _, k in backends:
            t, out = best_of(lambda: fn(k), reps)
            times.append(t)
            outs.append(out)
        line = f"{label:<28}" + "".join(f"{t:>14.4f}" for t in times)
        if len(backends) == 2:
            a, b = outs
            same = (a[0] == b[0] and np.array_equal(a[1], b[1])) if isinstance(a, tuple) else np.array_equal(a, b)
            line += f"{times[0] / times[1]:>9.1f}x" + ("" if same else "  OUTPUT MISMATCH")
        print(line)


if __name__ == "__main__":
    main()
