"""Half-edge polygon meshes, OBJ input/output, topologic refinement and local patches.

Only closed 2-manifolds are refined. Faces of any valence >= 3 are stored;
primal (Catmull-Clark type) refinement additionally requires all faces to be
quadrilaterals.
"""

from __future__ import annotations

import io
import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    BoundaryUnsupported,
    InconsistentOrientation,
    InsufficientRegularCollar,
    NonManifold,
    NonQuadFace,
)
from .schemes import SchemeDescriptor, dual_face_weights, parse_scheme, primal_rules


@dataclass(frozen=True)
class HalfEdges:
    """Connectivity arrays; half-edge ``h`` runs from ``origin[h]`` to ``origin[next[h]]``."""

    origin: np.ndarray
    next: np.ndarray
    prev: np.ndarray
    twin: np.ndarray  # -1 on the boundary
    face: np.ndarray
    edge: np.ndarray  # undirected edge id
    face_start: np.ndarray
    vertex_out: np.ndarray  # one outgoing half-edge per vertex, -1 if isolated
    n_edges: int

    def dest(self, h: int) -> int:
        return int(self.origin[self.next[h]])

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.unique(self.edge[self.twin < 0])


@dataclass(frozen=True, eq=False)
class QuadMesh:
    """Polygon mesh whose connectivity is built on first use.

    Construction does not validate; ``halfedges`` raises NonManifold or
    InconsistentOrientation on invalid input and ``validate_manifold`` reports
    violations without raising.
    """

    vertices: np.ndarray
    faces: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", tuple(tuple(int(i) for i in f) for f in self.faces))

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def halfedges(self) -> HalfEdges:
        return _build_halfedges(self.n_vertices, self.faces)

    @property
    def n_edges(self) -> int:
        return self.halfedges.n_edges

    @property
    def is_closed(self) -> bool:
        return bool(np.all(self.halfedges.twin >= 0))

    def with_vertices(self, vertices: np.ndarray) -> "QuadMesh":
        out = QuadMesh(vertices, self.faces)
        if "halfedges" in self.__dict__:
            out.__dict__["halfedges"] = self.halfedges
        return out

    def outgoing(self, v: int) -> list[int]:
        """Outgoing half-edges of an interior vertex in rotation order ``h -> twin(prev(h))``."""
        he = self.halfedges
        start = int(he.vertex_out[v])
        out = [start]
        h = start
        while True:
            t = int(he.twin[he.prev[h]])
            if t < 0:
                raise BoundaryUnsupported(f"vertex {v} lies on the boundary")
            if t == start:
                return out
            out.append(t)
            h = t

    def valence(self, v: int) -> int:
        return len(self.outgoing(v))


def euler_characteristic(m: QuadMesh) -> int:
    return m.n_vertices - m.n_edges + m.n_faces


def _build_halfedges(n_vertices: int, faces: Sequence[Sequence[int]]) -> HalfEdges:
    origin, nxt, prv, fc = [], [], [], []
    face_start = np.zeros(len(faces), dtype=int)
    for f, cyc in enumerate(faces):
        base = len(origin)
        face_start[f] = base
        k = len(cyc)
        for i, v in enumerate(cyc):
            origin.append(v)
            nxt.append(base + (i + 1) % k)
            prv.append(base + (i - 1) % k)
            fc.append(f)
    origin = np.array(origin, dtype=int)
    nxt = np.array(nxt, dtype=int)
    directed: dict[tuple[int, int], int] = {}
    undirected: dict[tuple[int, int], list[int]] = defaultdict(list)
    for h in range(origin.size):
        a, b = int(origin[h]), int(origin[nxt[h]])
        if (a, b) in directed:
            key = (min(a, b), max(a, b))
            if len(undirected[key]) >= 2:
                raise NonManifold(f"edge {key} has more than two incident faces")
            raise InconsistentOrientation(f"directed edge {(a, b)} appears twice")
        directed[(a, b)] = h
        undirected[(min(a, b), max(a, b))].append(h)
    twin = np.full(origin.size, -1, dtype=int)
    edge = np.zeros(origin.size, dtype=int)
    for e, (key, hs) in enumerate(sorted(undirected.items())):
        if len(hs) > 2:
            raise NonManifold(f"edge {key} has {len(hs)} incident faces")
        for h in hs:
            edge[h] = e
        if len(hs) == 2:
            twin[hs[0]], twin[hs[1]] = hs[1], hs[0]
    vertex_out = np.full(n_vertices, -1, dtype=int)
    for h in range(origin.size - 1, -1, -1):
        vertex_out[origin[h]] = h
    # boundary vertices start their fan at the boundary half-edge
    for h in np.where(twin < 0)[0]:
        vertex_out[origin[h]] = h
    he = HalfEdges(origin, nxt, np.array(prv, dtype=int), twin, np.array(fc, dtype=int), edge,
                   face_start, vertex_out, len(undirected))
    _check_vertex_fans(he, n_vertices)
    return he


def _check_vertex_fans(he: HalfEdges, n_vertices: int) -> None:
    counts = np.bincount(he.origin, minlength=n_vertices)
    for v in range(n_vertices):
        start = int(he.vertex_out[v])
        if start < 0:
            continue
        seen = 1
        h = start
        while True:
            t = int(he.twin[he.prev[h]])
            if t < 0 or t == start:
                break
            seen += 1
            h = t
            if seen > counts[v]:
                break
        if seen != counts[v]:
            raise NonManifold(f"vertex {v} has {counts[v]} incident faces in more than one fan")


# ---------------------------------------------------------------- OBJ


def _read_text(source: bytes | str | IO) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def load_obj(source: bytes | str | IO, orient: bool = True) -> QuadMesh:
    """Parse ``v``/``f`` records; orientation is made consistent when possible."""
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    for lineno, raw in enumerate(_read_text(source).splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise ValueError(f"line {lineno}: vertex needs three coordinates")
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = []
            for tok in parts[1:]:
                i = int(tok.split("/")[0])
                idx.append(i - 1 if i > 0 else len(verts) + i)
            if len(idx) < 3:
                raise ValueError(f"line {lineno}: face needs at least three vertices")
            faces.append(idx)
    for f in faces:
        for i in f:
            if not 0 <= i < len(verts):
                raise ValueError(f"face references missing vertex {i + 1}")
    if orient:
        faces = orient_faces(faces)
    m = QuadMesh(np.array(verts, dtype=float).reshape(-1, 3), faces)
    m.halfedges  # noqa: B018  connectivity errors surface here
    return m


def orient_faces(faces: Sequence[Sequence[int]]) -> list[list[int]]:
    """Flip faces so that every shared edge is traversed in opposite directions."""
    faces = [list(f) for f in faces]
    by_edge: dict[tuple[int, int], list[int]] = defaultdict(list)
    for fi, f in enumerate(faces):
        for a, b in zip(f, f[1:] + f[:1]):
            by_edge[(min(a, b), max(a, b))].append(fi)
    for key, fs in by_edge.items():
        if len(fs) > 2:
            raise NonManifold(f"edge {key} has {len(fs)} incident faces")
    done = [False] * len(faces)

    def direction(f: list[int], a: int, b: int) -> bool:
        k = len(f)
        return any(f[i] == a and f[(i + 1) % k] == b for i in range(k))

    for seed in range(len(faces)):
        if done[seed]:
            continue
        done[seed] = True
        queue = deque([seed])
        while queue:
            fi = queue.popleft()
            f = faces[fi]
            for a, b in zip(f, f[1:] + f[:1]):
                for gj in by_edge[(min(a, b), max(a, b))]:
                    if gj == fi:
                        continue
                    same = direction(faces[gj], a, b)
                    if done[gj]:
                        if same:
                            raise InconsistentOrientation(f"faces {fi} and {gj} cannot be oriented consistently")
                        continue
                    if same:
                        faces[gj] = faces[gj][::-1]
                    done[gj] = True
                    queue.append(gj)
    return faces


def save_obj(m: QuadMesh) -> str:
    """OBJ text with 17 significant digits, enough to round-trip every double."""
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in m.vertices]
    lines += ["f " + " ".join(str(i + 1) for i in f) for f in m.faces]
    return "\n".join(lines) + "\n"


def save_point_grid_obj(points: np.ndarray) -> str:
    """Grid of points (rows x cols x 3) as OBJ vertices joined by quad faces."""
    rows, cols, _ = points.shape
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in points.reshape(-1, 3)]
    for i in range(rows - 1):
        for j in range(cols - 1):
            a = i * cols + j + 1
            lines.append(f"f {a} {a + cols} {a + cols + 1} {a + 1}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    entries: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.entries

    def kinds(self) -> set[str]:
        return {e["kind"] for e in self.entries}

    def to_json(self) -> str:
        return json.dumps({"ok": self.ok, "entries": self.entries}, sort_keys=True)


def validate_manifold(m: QuadMesh) -> ValidationReport:
    rep = ValidationReport()
    for fi, f in enumerate(m.faces):
        if len(f) < 3 or len(set(f)) != len(f):
            rep.entries.append({"kind": "DegenerateFace", "face": fi, "vertices": list(f)})
        bad = [i for i in f if not 0 <= i < m.n_vertices]
        if bad:
            rep.entries.append({"kind": "MissingVertex", "face": fi, "vertices": bad})
    if rep.entries:
        return rep
    by_edge: dict[tuple[int, int], list[tuple[int, int, int]]] = defaultdict(list)
    for fi, f in enumerate(m.faces):
        for a, b in zip(f, f[1:] + f[:1]):
            by_edge[(min(a, b), max(a, b))].append((fi, a, b))
    manifold_edges = True
    for key in sorted(by_edge):
        uses = by_edge[key]
        if len(uses) > 2:
            manifold_edges = False
            rep.entries.append({"kind": "NonManifoldEdge", "edge": list(key), "faces": sorted(u[0] for u in uses)})
        elif len(uses) == 2 and uses[0][1:] == uses[1][1:]:
            rep.entries.append({"kind": "InconsistentOrientation", "edge": list(key), "faces": sorted(u[0] for u in uses)})
    if manifold_edges:
        rep.entries.extend(_vertex_fan_entries(m, by_edge))
    return rep


def _vertex_fan_entries(m: QuadMesh, by_edge) -> list[dict]:
    # faces around v are connected through edges incident to v
    incident: dict[int, list[int]] = defaultdict(list)
    for fi, f in enumerate(m.faces):
        for v in f:
            incident[v].append(fi)
    out = []
    for v in sorted(incident):
        fs = set(incident[v])
        adj: dict[int, set[int]] = defaultdict(set)
        for (a, b), uses in by_edge.items():
            if v in (a, b) and len(uses) == 2:
                f0, f1 = uses[0][0], uses[1][0]
                adj[f0].add(f1)
                adj[f1].add(f0)
        start = next(iter(fs))
        seen = {start}
        stack = [start]
        while stack:
            for g in adj[stack.pop()]:
                if g not in seen:
                    seen.add(g)
                    stack.append(g)
        if seen != fs:
            out.append({"kind": "NonManifoldVertex", "vertex": v, "faces": sorted(fs)})
    return out


# ---------------------------------------------------------------- classification


@dataclass
class ElementClassification:
    vertex_valence: np.ndarray
    face_valence: np.ndarray
    extraordinary_vertices: list[int]
    extraordinary_faces: list[int]
    boundary_vertices: list[int]

    @property
    def is_regular(self) -> bool:
        return not self.extraordinary_vertices and not self.extraordinary_faces


def classify_elements(m: QuadMesh) -> ElementClassification:
    he = m.halfedges
    val = np.bincount(_edge_endpoints(he), minlength=m.n_vertices)
    boundary = sorted({int(he.origin[h]) for h in np.where(he.twin < 0)[0]}
                      | {he.dest(int(h)) for h in np.where(he.twin < 0)[0]})
    bset = set(boundary)
    fval = np.array([len(f) for f in m.faces], dtype=int)
    ev = [v for v in range(m.n_vertices) if v not in bset and val[v] != 4 and val[v] > 0]
    ef = [f for f in range(m.n_faces) if fval[f] != 4]
    return ElementClassification(val, fval, ev, ef, boundary)


def _edge_endpoints(he: HalfEdges) -> np.ndarray:
    # each undirected edge once, both endpoints
    _, first = np.unique(he.edge, return_index=True)
    a = he.origin[first]
    b = he.origin[he.next[first]]
    return np.concatenate([a, b])


# ---------------------------------------------------------------- refinement


@dataclass
class Refinement:
    """Refined mesh, the sparse map old -> new vertex positions, and provenance."""

    mesh: QuadMesh
    operator: sp.csr_matrix
    corner_point: dict[tuple[int, int], int] = field(default_factory=dict)  # dual: (face, old vertex)
    vertex_point: dict[int, int] = field(default_factory=dict)  # primal
    edge_point: dict[tuple[int, int], int] = field(default_factory=dict)  # primal, key sorted
    face_point: dict[int, int] = field(default_factory=dict)  # primal


def _require_closed(m: QuadMesh) -> None:
    if not m.is_closed:
        raise BoundaryUnsupported("mesh has boundary edges; only closed meshes are refined")


def refine_dual(m: QuadMesh, scheme: SchemeDescriptor, k: int) -> Refinement:
    """One Doo-Sabin type step: a new point per (face, corner) pair."""
    _require_closed(m)
    he = m.halfedges
    offsets = np.cumsum([0] + [len(f) for f in m.faces])
    corner: dict[tuple[int, int], int] = {}
    rows, cols, vals = [], [], []
    for fi, f in enumerate(m.faces):
        n = len(f)
        w = dual_face_weights(scheme, k, n)
        for i, v in enumerate(f):
            new = int(offsets[fi] + i)
            corner[(fi, v)] = new
            for d in range(n):
                rows.append(new)
                cols.append(f[(i + d) % n])
                vals.append(w[d])
    new_faces: list[list[int]] = [[int(offsets[fi] + i) for i in range(len(f))] for fi, f in enumerate(m.faces)]
    # one quad per undirected edge
    for h in range(he.origin.size):
        t = int(he.twin[h])
        if h > t:
            continue
        a, b = int(he.origin[h]), he.dest(h)
        f, g = int(he.face[h]), int(he.face[t])
        new_faces.append([corner[(f, b)], corner[(f, a)], corner[(g, a)], corner[(g, b)]])
    for v in range(m.n_vertices):
        if he.vertex_out[v] < 0:
            continue
        new_faces.append([corner[(int(he.face[h]), v)] for h in m.outgoing(v)])
    W = sp.csr_matrix((vals, (rows, cols)), shape=(int(offsets[-1]), m.n_vertices))
    mesh = QuadMesh(W @ m.vertices, new_faces)
    return Refinement(mesh, W, corner_point=corner)


def refine_primal(m: QuadMesh, scheme: SchemeDescriptor, k: int) -> Refinement:
    """One Catmull-Clark type step on an all-quad mesh."""
    _require_closed(m)
    for fi, f in enumerate(m.faces):
        if len(f) != 4:
            raise NonQuadFace(f"face {fi} has {len(f)} vertices; primal refinement needs quads")
    he = m.halfedges
    nf, ne, nv = m.n_faces, he.n_edges, m.n_vertices
    rows, cols, vals = [], [], []

    def add(r: int, c: int, w: float) -> None:
        rows.append(r)
        cols.append(c)
        vals.append(w)

    rule4 = primal_rules(scheme, k, 4)
    face_point = {}
    for fi, f in enumerate(m.faces):
        face_point[fi] = fi
        for v in f:
            add(fi, v, rule4.face)
    edge_point = {}
    for h in range(he.origin.size):
        t = int(he.twin[h])
        if h > t:
            continue
        a, b = int(he.origin[h]), he.dest(h)
        r = nf + int(he.edge[h])
        edge_point[(min(a, b), max(a, b))] = r
        add(r, a, rule4.edge_end)
        add(r, b, rule4.edge_end)
        for side in (h, t):
            # the two face vertices not on the edge
            add(r, int(he.origin[he.next[he.next[side]]]), rule4.edge_side)
            add(r, int(he.origin[he.prev[side]]), rule4.edge_side)
    vertex_point = {}
    for v in range(nv):
        if he.vertex_out[v] < 0:
            continue
        out = m.outgoing(v)
        rule = primal_rules(scheme, k, len(out))
        r = nf + ne + v
        vertex_point[v] = r
        add(r, v, rule.vertex_centre)
        for h in out:
            add(r, he.dest(h), rule.vertex_edge)
            add(r, int(he.origin[he.next[he.next[h]]]), rule.vertex_face)
    new_faces = []
    for fi, f in enumerate(m.faces):
        for i in range(4):
            a, b, c = f[i - 1], f[i], f[(i + 1) % 4]
            new_faces.append([
                nf + ne + b,
                edge_point[(min(b, c), max(b, c))],
                fi,
                edge_point[(min(a, b), max(a, b))],
            ])
    W = sp.csr_matrix((vals, (rows, cols)), shape=(nf + ne + nv, nv))
    mesh = QuadMesh(W @ m.vertices, new_faces)
    return Refinement(mesh, W, vertex_point=vertex_point, edge_point=edge_point, face_point=face_point)


def refine_with_map(m: QuadMesh, scheme: SchemeDescriptor, k: int) -> Refinement:
    if scheme.kind == "dual":
        return refine_dual(m, scheme, k)
    return refine_primal(m, scheme, k)


def refine(m: QuadMesh, scheme: SchemeDescriptor, k: int = 1) -> QuadMesh:
    """Level-k refinement of ``m`` with the geometric rules of ``scheme``."""
    return refine_with_map(m, scheme, k).mesh


def refine_topology_dual(m: QuadMesh) -> QuadMesh:
    """Doo-Sabin connectivity; positions follow the stationary Doo-Sabin rule."""
    return refine_dual(m, parse_scheme("ds"), 1).mesh


def refine_topology_primal(m: QuadMesh) -> QuadMesh:
    """Catmull-Clark connectivity; positions follow the stationary Catmull-Clark rule."""
    return refine_primal(m, parse_scheme("cc"), 1).mesh


# ---------------------------------------------------------------- local patches


@dataclass(frozen=True, eq=False)
class LocalPatch:
    """Control points around one extraordinary element in block-circulant row order.

    Face-centred rows per sector: the face corner, its outward neighbour toward
    the previous sector, the diagonal point, its outward neighbour toward the
    next sector. Vertex-centred rows per sector: the centre (replicated), the
    edge neighbour, the face-opposite vertex, then the second ring in the order
    outward-from-edge, its neighbour toward the face vertex, the far corner of
    the face vertex, and the face vertex's neighbour toward the next sector.
    """

    n: int
    p: int
    kind: str
    d: np.ndarray
    rows: np.ndarray
    element: int

    @property
    def N(self) -> int:
        return self.d.shape[0]

    def with_points(self, d: np.ndarray) -> "LocalPatch":
        return LocalPatch(self.n, self.p, self.kind, np.asarray(d, dtype=float), self.rows, self.element)


def _collar_error(msg: str) -> InsufficientRegularCollar:
    return InsufficientRegularCollar(msg)


def extract_local_neighborhood(m: QuadMesh, element: int, kind: str, start: int | None = None) -> LocalPatch:
    """Local patch around face ``element`` (kind "dual") or vertex ``element`` (kind "primal").

    ``start`` picks the first sector: a corner of the face, or an edge
    neighbour of the vertex. Default: the first corner / first outgoing edge.
    """
    _require_closed(m)
    if kind in ("dual", "face"):
        rows = _dual_rows(m, element, start)
        p = 4
        kind = "dual"
    elif kind in ("primal", "vertex"):
        rows = _primal_rows(m, element, start)
        p = 6
        kind = "primal"
    else:
        raise ValueError(f"unknown patch kind {kind!r}")
    rows = np.asarray(rows, dtype=int)
    n = rows.size // (p if kind == "dual" else p + 1)
    return LocalPatch(n, p, kind, m.vertices[rows].copy(), rows, element)


def _face_cycle(he: HalfEdges, h: int) -> list[int]:
    out = [int(he.origin[h])]
    g = int(he.next[h])
    while g != h:
        out.append(int(he.origin[g]))
        g = int(he.next[g])
    return out


def _dual_rows(m: QuadMesh, f: int, start: int | None) -> list[int]:
    he = m.halfedges
    corners = list(m.faces[f])
    n = len(corners)
    if start is not None:
        if start not in corners:
            raise ValueError(f"vertex {start} is not a corner of face {f}")
        i0 = corners.index(start)
        corners = corners[i0:] + corners[:i0]
    # half-edge v_i -> v_(i+1) inside f
    h_of = {}
    h = int(he.face_start[f])
    for _ in range(n):
        h_of[int(he.origin[h])] = h
        h = int(he.next[h])
    s1, s2, s3 = [0] * n, [0] * n, [0] * n
    for i, v in enumerate(corners):
        g = int(he.twin[h_of[v]])
        cyc = _face_cycle(he, g)  # v_(i+1), v_i, s3_i, s1_(i+1)
        if len(cyc) != 4:
            raise _collar_error(f"face {int(he.face[g])} next to face {f} is not a quad")
        s3[i] = cyc[2]
        s1[(i + 1) % n] = cyc[3]
    for i, v in enumerate(corners):
        # diagonal quad: v_i -> s1_i -> s2_i -> s3_i
        prev_edge_face = int(he.twin[h_of[corners[i - 1]]])
        back = int(he.prev[prev_edge_face])  # s1_i -> v_i
        d = int(he.twin[back])
        cyc = _face_cycle(he, d)
        if len(cyc) != 4 or cyc[1] != s1[i] or cyc[3] != s3[i]:
            raise _collar_error(f"corner {v} of face {f} is not a regular valence-4 vertex")
        s2[i] = cyc[2]
        if m.valence(v) != 4:
            raise _collar_error(f"corner {v} of face {f} has valence {m.valence(v)}")
    rows = []
    for i, v in enumerate(corners):
        rows += [v, s1[i], s2[i], s3[i]]
    if len(set(rows)) != len(rows):
        raise _collar_error(f"collar of face {f} references a vertex twice")
    return rows


def _primal_rows(m: QuadMesh, v: int, start: int | None) -> list[int]:
    he = m.halfedges
    out = m.outgoing(v)
    if start is not None:
        dests = [he.dest(h) for h in out]
        if start not in dests:
            raise ValueError(f"vertex {start} is not adjacent to {v}")
        i0 = dests.index(start)
        out = out[i0:] + out[:i0]
    n = len(out)
    sectors = []
    for h in out:
        face = _face_cycle(he, h)  # v, e_i, f_i, e_(i+1)
        if len(face) != 4:
            raise _collar_error(f"face {int(he.face[h])} around vertex {v} is not a quad")
        e, fv = face[1], face[2]
        y = _face_cycle(he, int(he.twin[he.next[h]]))  # f_i, e_i, s2, s3
        z = _face_cycle(he, int(he.twin[he.next[he.next[h]]]))  # e_(i+1), f_i, s5, s2_(i+1)
        if len(y) != 4 or len(z) != 4:
            raise _collar_error(f"second ring around vertex {v} contains a non-quad face")
        s2, s3 = y[2], y[3]
        s5 = z[2]
        hw = int(he.prev[he.twin[he.next[h]]])  # s3 -> f_i inside y
        w = _face_cycle(he, int(he.twin[hw]))  # f_i, s3, s4, s5
        if len(w) != 4 or w[3] != s5:
            raise _collar_error(f"face vertex {fv} near vertex {v} is not regular")
        for u in (e, fv):
            if m.valence(u) != 4:
                raise _collar_error(f"vertex {u} near {v} has valence {m.valence(u)}")
        sectors.append([e, fv, s2, s3, w[2], s5, z[3]])
    for i in range(n):
        if sectors[i][6] != sectors[(i + 1) % n][2]:
            raise _collar_error(f"second ring around vertex {v} does not close")
    rows = []
    for s in sectors:
        rows += [v] + s[:6]
    if len(set(rows)) != 6 * n + 1:
        raise _collar_error(f"collar of vertex {v} references a vertex twice")
    return rows


def sector_start_after_refinement(ref: Refinement, kind: str, element: int, start: int) -> tuple[int, int]:
    """Element id and first-sector vertex of the refined patch matching a level-k patch."""
    if kind == "dual":
        return element, ref.corner_point[(element, start)]
    return ref.vertex_point[element], ref.edge_point[(min(element, start), max(element, start))]
