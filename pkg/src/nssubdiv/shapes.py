"""Small closed test meshes used by the CLI demos, the acceptance suite and the tests."""

from __future__ import annotations

import math

import numpy as np

from .mesh import QuadMesh


def cube(size: float = 1.0) -> QuadMesh:
    s = size / 2
    v = [[x, y, z] for x in (-s, s) for y in (-s, s) for z in (-s, s)]
    # index = 4 * ix + 2 * iy + iz; faces counter-clockwise seen from outside
    f = [
        [0, 1, 3, 2],  # x = -s
        [4, 6, 7, 5],  # x = +s
        [0, 4, 5, 1],  # y = -s
        [2, 3, 7, 6],  # y = +s
        [0, 2, 6, 4],  # z = -s
        [1, 5, 7, 3],  # z = +s
    ]
    return QuadMesh(np.array(v, dtype=float), f)


def prism(n: int, radius: float = 1.0, height: float = 1.0) -> QuadMesh:
    """Closed n-gonal prism: n side quads and two n-gon caps."""
    ang = 2 * np.pi * np.arange(n) / n
    ring = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    bottom = np.column_stack([ring, np.full(n, -height / 2)])
    top = np.column_stack([ring, np.full(n, height / 2)])
    v = np.vstack([bottom, top])
    faces = [[i, (i + 1) % n, n + (i + 1) % n, n + i] for i in range(n)]
    faces.append(list(range(n))[::-1])
    faces.append([n + i for i in range(n)])
    return QuadMesh(v, faces)


def spindle(n: int, radius: float = 1.0, height: float = 1.0, apex: float = 0.6) -> QuadMesh:
    """All-quad closed mesh: an n-prism whose caps are fans of quads around a raised apex.

    The apexes have valence n, the ring corners valence 3, everything else valence 4.
    """
    ang = 2 * np.pi * np.arange(n) / n
    mid = ang + np.pi / n
    r_mid = radius * math.cos(np.pi / n)
    pts = []
    for z, tip in ((-height / 2, -height / 2 - apex), (height / 2, height / 2 + apex)):
        pts += [[radius * math.cos(a), radius * math.sin(a), z] for a in ang]
        pts += [[r_mid * math.cos(a), r_mid * math.sin(a), z] for a in mid]
        pts.append([0.0, 0.0, tip])
    blk = 2 * n + 1

    def ring(c: int, i: int) -> int:
        return c * blk + i % n

    def midp(c: int, i: int) -> int:
        return c * blk + n + i % n

    faces = []
    for i in range(n):
        faces.append([ring(0, i), midp(0, i), midp(1, i), ring(1, i)])
        faces.append([midp(0, i), ring(0, i + 1), ring(1, i + 1), midp(1, i)])
        # top cap counter-clockwise from +z, bottom cap from -z
        faces.append([2 * blk - 1, midp(1, i - 1), ring(1, i), midp(1, i)])
        faces.append([blk - 1, midp(0, i), ring(0, i), midp(0, i - 1)])
    return QuadMesh(np.array(pts, dtype=float), faces)


def torus(nu: int = 8, nv: int = 8, major: float = 2.0, minor: float = 1.0) -> QuadMesh:
    """Regular closed quad grid on a torus; every vertex has valence 4."""
    pts = []
    for i in range(nu):
        a = 2 * np.pi * i / nu
        for j in range(nv):
            b = 2 * np.pi * j / nv
            r = major + minor * math.cos(b)
            pts.append([r * math.cos(a), r * math.sin(a), minor * math.sin(b)])
    idx = lambda i, j: (i % nu) * nv + j % nv  # noqa: E731
    faces = [[idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)] for i in range(nu) for j in range(nv)]
    return QuadMesh(np.array(pts), faces)


def height_torus(nu: int, nv: int, heights: np.ndarray) -> QuadMesh:
    """Flat doubly periodic grid with unit spacing and z-values ``heights[i, j]``.

    Topologically a torus, so it is closed and regular; locally it is the graph
    of a bivariate function over the integer lattice.
    """
    pts = [[float(i), float(j), float(heights[i, j])] for i in range(nu) for j in range(nv)]
    idx = lambda i, j: (i % nu) * nv + j % nv  # noqa: E731
    faces = [[idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)] for i in range(nu) for j in range(nv)]
    return QuadMesh(np.array(pts), faces)


def extraordinary_patch(kind: str, n: int, amplitude: float = 0.05, seed: int = 5):
    """Local patch around a valence-n element of a generic closed mesh.

    Dual: the n-gon cap of ``prism(n)``. Primal: the apex of ``spindle(n)``.
    The mesh is refined twice with the stationary rules to get a regular
    collar, then every vertex is jittered with a seeded Gaussian so the data
    carries no symmetry.
    """
    from .mesh import classify_elements, extract_local_neighborhood, refine
    from .schemes import parse_scheme

    if kind == "dual":
        m, base = prism(n), parse_scheme("ds")
    elif kind == "primal":
        m, base = spindle(n), parse_scheme("cc")
    else:
        raise ValueError(f"unknown patch kind {kind!r}")
    for _ in range(2):
        m = refine(m, base, 1)
    rng = np.random.default_rng(seed)
    m = m.with_vertices(m.vertices + amplitude * rng.standard_normal(m.vertices.shape))
    cl = classify_elements(m)
    if kind == "dual":
        element = next(f for f in cl.extraordinary_faces if len(m.faces[f]) == n)
    else:
        element = next(v for v in cl.extraordinary_vertices if m.valence(v) == n)
    return extract_local_neighborhood(m, element, kind)
