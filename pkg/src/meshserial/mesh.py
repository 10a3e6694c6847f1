"""Unstructured meshes, nodal fields, and their file formats.

Supported inputs are an ASCII subset of Gmsh MSH 4.1 (read-only) and a native
JSON document::

    {"dim": 2,
     "coords": [[x, y], ...],
     "elements": [{"kind": "quad", "nodes": [0, 1, 3, 2]}, ...]}

Field data is stored as a u64 little-endian count followed by that many
little-endian binary64 values.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import MeshParseError
from .permute import Permutation, invert_permutation
from .rng import shuffled_range

ELEMENT_ARITY = {"segment": 2, "triangle": 3, "quad": 4, "tetra": 4, "hex": 8}
GMSH_ELEMENT_KINDS = {1: "segment", 2: "triangle", 3: "quad", 4: "tetra", 5: "hex"}
VOLUME_KINDS = frozenset({"tetra", "hex"})


@dataclass(frozen=True)
class Element:
    kind: str
    nodes: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(v) for v in self.nodes))


@dataclass(frozen=True, eq=False)
class Mesh:
    """Node coordinates plus element connectivity with dense 0-based ids.

    ``coords`` is an ``(n_nodes, dim)`` float64 array, read-only after
    construction. Validation runs on construction, so every ``Mesh`` in
    circulation satisfies the id-range and distinct-node invariants.
    """

    dim: int
    coords: np.ndarray
    elements: tuple

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        coords = np.array(self.coords, dtype=np.float64, copy=True)
        if coords.size == 0:
            coords = coords.reshape(0, self.dim)
        if coords.ndim != 2 or coords.shape[1] != self.dim:
            raise ValueError(f"coords must have shape (n, {self.dim}), got {coords.shape}")
        if not np.isfinite(coords).all():
            raise ValueError("non-finite coordinate")
        coords.setflags(write=False)
        elements = tuple(
            e if isinstance(e, Element) else Element(e[0], e[1]) for e in self.elements
        )
        n = coords.shape[0]
        for idx, e in enumerate(elements):
            arity = ELEMENT_ARITY.get(e.kind)
            if arity is None:
                raise ValueError(f"element {idx}: unknown kind {e.kind!r}")
            if len(e.nodes) != arity:
                raise ValueError(f"element {idx}: {e.kind} needs {arity} nodes, got {len(e.nodes)}")
            if len(set(e.nodes)) != arity:
                raise ValueError(f"element {idx}: repeated node id")
            for v in e.nodes:
                if not 0 <= v < n:
                    raise ValueError(f"element {idx}: node id {v} out of range [0, {n})")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "elements", elements)

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.coords.shape == other.coords.shape
            # bitwise, so -0.0 != 0.0
            and np.array_equal(self.coords.view(np.uint64), other.coords.view(np.uint64))
            and self.elements == other.elements
        )

    def __repr__(self):
        return f"Mesh(dim={self.dim}, n_nodes={self.n_nodes}, n_elements={len(self.elements)})"


@dataclass(frozen=True, eq=False)
class FieldData:
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if not np.isfinite(values).all():
            raise ValueError(f"field {self.name!r} has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FieldData):
            return NotImplemented
        return self.name == other.name and np.array_equal(
            self.values.view(np.uint64), other.values.view(np.uint64)
        )


def validate_field(mesh: Mesh, field: FieldData) -> None:
    if len(field) != mesh.n_nodes:
        raise ValueError(f"field {field.name!r} has {len(field)} values, mesh has {mesh.n_nodes} nodes")


# -- Gmsh MSH 4.1 ASCII ------------------------------------------------------

class _Lines:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, what: str):
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line, self.pos
        raise MeshParseError(f"unexpected end of file while reading {what}", self.pos)

    def at_end(self) -> bool:
        while self.pos < len(self.lines) and not self.lines[self.pos].strip():
            self.pos += 1
        return self.pos >= len(self.lines)


def _ints(line: str, lineno: int, count: int | None = None) -> list:
    try:
        vals = [int(t) for t in line.split()]
    except ValueError:
        raise MeshParseError(f"expected integers, got {line!r}", lineno) from None
    if count is not None and len(vals) != count:
        raise MeshParseError(f"expected {count} integers, got {len(vals)}", lineno)
    return vals


def _expect_end(lines: _Lines, name: str):
    line, lineno = lines.next(f"$End{name}")
    if line != f"$End{name}":
        raise MeshParseError(f"malformed section: expected $End{name}, got {line!r}", lineno)


def _parse_format(lines: _Lines):
    line, lineno = lines.next("$MeshFormat body")
    parts = line.split()
    if len(parts) != 3:
        raise MeshParseError(f"malformed $MeshFormat line {line!r}", lineno)
    if parts[0] != "4.1":
        raise MeshParseError(f"unsupported MSH version {parts[0]} (need 4.1)", lineno)
    if parts[1] != "0":
        raise MeshParseError("binary MSH files are not supported", lineno)
    _expect_end(lines, "MeshFormat")


def _parse_nodes(lines: _Lines):
    line, lineno = lines.next("$Nodes header")
    n_blocks, n_nodes, _, _ = _ints(line, lineno, 4)
    tags, xyz = [], []
    for _ in range(n_blocks):
        line, lineno = lines.next("node block header")
        _, _, parametric, n_in_block = _ints(line, lineno, 4)
        for _ in range(n_in_block):
            line, lineno = lines.next("node tag")
            tags.append(_ints(line, lineno, 1)[0])
        for _ in range(n_in_block):
            line, lineno = lines.next("node coordinates")
            parts = line.split()
            if len(parts) < 3:
                raise MeshParseError(f"expected 3 coordinates, got {line!r}", lineno)
            try:
                x = [float(t) for t in parts[:3]]
            except ValueError:
                raise MeshParseError(f"bad coordinate in {line!r}", lineno) from None
            if not all(math.isfinite(c) for c in x):
                raise MeshParseError("non-finite coordinate", lineno)
            if not parametric and len(parts) != 3:
                raise MeshParseError(f"expected 3 coordinates, got {line!r}", lineno)
            xyz.append(x)
    if len(tags) != n_nodes:
        raise MeshParseError(f"$Nodes header announces {n_nodes} nodes, blocks hold {len(tags)}", lineno)
    _expect_end(lines, "Nodes")
    return tags, xyz


def _parse_elements(lines: _Lines, remap: dict):
    line, lineno = lines.next("$Elements header")
    n_blocks, n_elems, _, _ = _ints(line, lineno, 4)
    elements, seen = [], 0
    for _ in range(n_blocks):
        line, lineno = lines.next("element block header")
        _, _, etype, n_in_block = _ints(line, lineno, 4)
        kind = GMSH_ELEMENT_KINDS.get(etype)
        if kind is None:
            raise MeshParseError(f"unknown element type {etype}", lineno)
        arity = ELEMENT_ARITY[kind]
        for _ in range(n_in_block):
            line, lineno = lines.next("element")
            vals = _ints(line, lineno, arity + 1)
            nodes = []
            for tag in vals[1:]:
                if tag not in remap:
                    raise MeshParseError(f"node reference to absent id {tag}", lineno)
                nodes.append(remap[tag])
            if len(set(nodes)) != arity:
                raise MeshParseError("element repeats a node", lineno)
            elements.append(Element(kind, tuple(nodes)))
        seen += n_in_block
    if seen != n_elems:
        raise MeshParseError(f"$Elements header announces {n_elems} elements, blocks hold {seen}", lineno)
    _expect_end(lines, "Elements")
    return elements


def parse_msh_ascii(text: str) -> Mesh:
    """Parse the $MeshFormat/$Nodes/$Elements subset of Gmsh MSH 4.1 ASCII.

    Node tags are densified to 0-based ids in order of appearance. Other
    sections (``$Entities``, ``$PhysicalNames``, ...) are skipped. The mesh
    is 3-D if any z coordinate is nonzero or any tetra/hex is present,
    otherwise 2-D with z dropped.

    Raises
    ------
    MeshParseError
        With the offending line number.
    """
    lines = _Lines(text)
    tags, xyz, elements = [], [], []
    have_format = have_nodes = False
    while not lines.at_end():
        line, lineno = lines.next("section header")
        if not line.startswith("$") or line.startswith("$End"):
            raise MeshParseError(f"malformed section header {line!r}", lineno)
        name = line[1:]
        if name == "MeshFormat":
            _parse_format(lines)
            have_format = True
        elif not have_format:
            raise MeshParseError("$MeshFormat must come first", lineno)
        elif name == "Nodes":
            tags, xyz = _parse_nodes(lines)
            have_nodes = True
        elif name == "Elements":
            remap = {t: i for i, t in enumerate(tags)} if have_nodes else {}
            if len(remap) != len(tags):
                raise MeshParseError("duplicate node tag in $Nodes", lineno)
            elements = _parse_elements(lines, remap)
        else:
            while True:
                inner, inner_no = lines.next(f"$End{name}")
                if inner == f"$End{name}":
                    break
                if inner.startswith("$") and not inner.startswith("$End"):
                    raise MeshParseError(f"malformed section: missing $End{name}", inner_no)
    coords = np.array(xyz, dtype=np.float64).reshape(-1, 3)
    is_3d = bool(np.any(coords[:, 2] != 0.0)) or any(e.kind in VOLUME_KINDS for e in elements)
    dim = 3 if is_3d else 2
    return Mesh(dim, coords[:, :dim], tuple(elements))


def read_msh(path) -> Mesh:
    with open(path, encoding="utf-8") as f:
        return parse_msh_ascii(f.read())


# -- native JSON -------------------------------------------------------------

def mesh_to_json(mesh: Mesh) -> str:
    doc = {
        "dim": mesh.dim,
        "coords": mesh.coords.tolist(),
        "elements": [{"kind": e.kind, "nodes": list(e.nodes)} for e in mesh.elements],
    }
    return json.dumps(doc, separators=(",", ":"))


def mesh_from_json(text: str) -> Mesh:
    try:
        doc = json.loads(text)
        dim = int(doc["dim"])
        coords = np.array(doc["coords"], dtype=np.float64).reshape(-1, dim)
        elements = tuple(Element(e["kind"], e["nodes"]) for e in doc["elements"])
    except (ValueError, KeyError, TypeError) as exc:
        raise MeshParseError(f"invalid native mesh document: {exc}") from None
    try:
        return Mesh(dim, coords, elements)
    except ValueError as exc:
        raise MeshParseError(str(exc)) from None


def save_mesh(path, mesh: Mesh) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(mesh_to_json(mesh))


def load_mesh(path) -> Mesh:
    """Load a ``.msh`` (Gmsh 4.1 ASCII) or native JSON mesh by extension."""
    path = str(path)
    if path.endswith(".msh"):
        return read_msh(path)
    with open(path, encoding="utf-8") as f:
        return mesh_from_json(f.read())


_U64 = struct.Struct("<Q")


def write_field(values) -> bytes:
    arr = np.asarray(getattr(values, "values", values), dtype="<f8").reshape(-1)
    return _U64.pack(arr.shape[0]) + arr.tobytes()


def read_field(data: bytes, name: str = "") -> FieldData:
    if len(data) < 8:
        raise MeshParseError("field file shorter than its length prefix")
    (n,) = _U64.unpack_from(data)
    if len(data) != 8 + 8 * n:
        raise MeshParseError(f"field file announces {n} values but holds {(len(data) - 8) / 8:g}")
    return FieldData(np.frombuffer(data, dtype="<f8", offset=8).astype(np.float64), name)


def save_field(path, field) -> None:
    with open(path, "wb") as f:
        f.write(write_field(field))


def load_field(path, name: str = "") -> FieldData:
    with open(path, "rb") as f:
        return read_field(f.read(), name)


# -- synthetic meshes and fields ----------------------------------------------

def generate_structured(nx: int, ny: int, kind: str = "quad") -> Mesh:
    """Unit-square grid of ``nx * ny`` cells with row-major node ids.

    Node ``j * (nx + 1) + i`` sits at ``(i / nx, j / ny)``. Quads are wound
    counter-clockwise; ``tri`` splits each cell along its (i,j)-(i+1,j+1)
    diagonal.
    """
    if nx < 1 or ny < 1:
        raise ValueError("cell counts must be at least 1")
    if kind not in ("quad", "tri"):
        raise ValueError(f"kind must be 'quad' or 'tri', got {kind!r}")
    xs = np.arange(nx + 1) / nx
    ys = np.arange(ny + 1) / ny
    gx, gy = np.meshgrid(xs, ys)
    coords = np.column_stack([gx.ravel(), gy.ravel()])
    elements = []
    w = nx + 1
    for j in range(ny):
        for i in range(nx):
            a = j * w + i
            b, c, d = a + 1, a + w + 1, a + w
            if kind == "quad":
                elements.append(Element("quad", (a, b, c, d)))
            else:
                elements.append(Element("triangle", (a, b, c)))
                elements.append(Element("triangle", (a, c, d)))
    return Mesh(2, coords, tuple(elements))


def relabel_nodes(mesh: Mesh, perm: Permutation) -> Mesh:
    """New node ``i`` is old node ``perm.order[i]``."""
    if len(perm) != mesh.n_nodes:
        raise ValueError("permutation length differs from node count")
    new_id = invert_permutation(perm).order
    elements = tuple(
        Element(e.kind, tuple(int(new_id[v]) for v in e.nodes)) for e in mesh.elements
    )
    return Mesh(mesh.dim, mesh.coords[perm.order], elements)


def shuffle_node_labels(mesh: Mesh, seed: int) -> tuple[Mesh, Permutation]:
    """Relabel nodes by a seeded bijection (see :mod:`meshserial.rng`).

    Returns the shuffled mesh and ``relabel`` with ``relabel.order[i]`` the
    original id of new node ``i``; ``relabel_nodes(shuffled,
    invert_permutation(relabel))`` gives back the input mesh.
    """
    relabel = Permutation(shuffled_range(mesh.n_nodes, seed))
    return relabel_nodes(mesh, relabel), relabel


def _sinprod(x, y):
    return np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)


def _radial(x, y):
    return np.exp(-4.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2))


def _linear(x, y):
    return x + 2.0 * y


FIELD_EXPRESSIONS = {"sinprod": _sinprod, "radial": _radial, "linear": _linear}


def sample_field(mesh: Mesh, expr: str) -> FieldData:
    try:
        f = FIELD_EXPRESSIONS[expr]
    except KeyError:
        raise ValueError(f"unknown field expression {expr!r}; choose from {sorted(FIELD_EXPRESSIONS)}") from None
    x, y = mesh.coords[:, 0], mesh.coords[:, 1]
    return FieldData(f(x, y), expr)


def elements_by_kind(mesh: Mesh) -> dict:
    """Group connectivity into one ``(m, arity)`` int64 array per kind."""
    groups: dict = {}
    for e in mesh.elements:
        groups.setdefault(e.kind, []).append(e.nodes)
    return {k: np.array(v, dtype=np.int64).reshape(-1, ELEMENT_ARITY[k]) for k, v in groups.items()}
