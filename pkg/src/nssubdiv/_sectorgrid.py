"""Control nets around an extraordinary element stored as per-sector quadrant grids.

Sector ``i`` uses a frame in which sector ``i - 1`` lies at negative y and
sector ``i + 1`` at negative x. Primal nets hold the centre plus points with
``x >= 1, y >= 0``; dual nets hold points with ``x, y >= 0`` (positions at
half-integers, the extraordinary face centred on the origin).
"""

from __future__ import annotations

import numpy as np

from .schemes import SchemeDescriptor, dual_face_weights, primal_rules, regular_factor


class SectorNet:
    def __init__(self, kind: str, quads: np.ndarray, centre: np.ndarray | None = None):
        self.kind = kind
        self.quads = quads  # primal: (n, R, R+1, dim); dual: (n, R, R, dim)
        self.centre = centre
        self.n = quads.shape[0]
        self.R = quads.shape[1]
        self.dim = quads.shape[-1]

    # ------------------------------------------------------------ layout

    @classmethod
    def from_patch_vector(cls, kind: str, n: int, d: np.ndarray) -> "SectorNet":
        d = np.asarray(d, dtype=float)
        if d.ndim == 1:
            d = d[:, None]
        dim = d.shape[1]
        if kind == "dual":
            q = np.zeros((n, 2, 2, dim))
            for i in range(n):
                v, s1, s2, s3 = d[4 * i:4 * i + 4]
                q[i, 0, 0], q[i, 1, 0], q[i, 1, 1], q[i, 0, 1] = v, s1, s2, s3
            return cls("dual", q)
        q = np.zeros((n, 2, 3, dim))
        copies = d[0::7]
        centre = copies[0] if np.all(copies == copies[0]) else copies.mean(axis=0)
        for i in range(n):
            _, e, f, s2, s3, s4, s5 = d[7 * i:7 * i + 7]
            q[i, 0, 0], q[i, 0, 1], q[i, 1, 0], q[i, 1, 1], q[i, 1, 2], q[i, 0, 2] = e, f, s2, s3, s4, s5
        return cls("primal", q, centre)

    def to_patch_vector(self) -> np.ndarray:
        rows = []
        for i in range(self.n):
            q = self.quads[i]
            if self.kind == "dual":
                rows += [q[0, 0], q[1, 0], q[1, 1], q[0, 1]]
            else:
                rows += [self.centre, q[0, 0], q[0, 1], q[1, 0], q[1, 1], q[1, 2], q[0, 2]]
        return np.array(rows)

    def get(self, i: int, x: int, y: int) -> np.ndarray:
        i %= self.n
        if self.kind == "primal":
            if x == 0 and y == 0:
                return self.centre
            if y < 0 and x >= 0:
                return self.get(i - 1, -y, x)
            if x <= 0 and y >= 1:
                return self.get(i + 1, y, -x)
            if x < 0:
                raise IndexError("point outside the sector charts")
            return self.quads[i, x - 1, y]
        if y < 0 and x >= 0:
            return self.get(i - 1, -y - 1, x)
        if x < 0 and y >= 0:
            return self.get(i + 1, y, -x - 1)
        if x < 0:
            raise IndexError("point outside the sector charts")
        return self.quads[i, x, y]

    def gather(self, i: int, xs: range, ys: range) -> np.ndarray:
        return np.array([[self.get(i, x, y) for y in ys] for x in xs])

    def _padded(self, i: int) -> np.ndarray:
        """Grid over x, y in -1..R (primal) or -1..R-1 (dual); points outside every chart are NaN."""
        top = self.R + 1 if self.kind == "primal" else self.R
        out = np.full((top + 1, top + 1, self.dim), np.nan)
        for x in range(-1, top):
            for y in range(-1, top):
                if x < 0 and (y < 0 or (self.kind == "primal" and y == 0)):
                    continue
                out[x + 1, y + 1] = self.get(i, x, y)
        return out

    # ------------------------------------------------------------ refinement

    def refine(self, scheme: SchemeDescriptor, k: int) -> "SectorNet":
        """One level-k step; the quadrant radius grows from R to 2R - 1."""
        if self.kind == "dual":
            return self._refine_dual(scheme, k)
        return self._refine_primal(scheme, k)

    def _refine_dual(self, s: SchemeDescriptor, k: int) -> "SectorNet":
        R = self.R
        w4 = dual_face_weights(s, k, 4)
        wn = dual_face_weights(s, k, self.n)
        own, side, diag = w4[0], w4[1], w4[2]
        R2 = 2 * R - 1
        out = np.zeros((self.n, R2, R2, self.dim))
        for i in range(self.n):
            P = self._padded(i)  # index x + 1
            for sx in (-1, 1):
                for sy in (-1, 1):
                    xs = np.arange(R)
                    ys = np.arange(R)
                    X = 2 * xs + (sx > 0)
                    Y = 2 * ys + (sy > 0)
                    keepx = X < R2
                    keepy = Y < R2
                    xs, X = xs[keepx], X[keepx]
                    ys, Y = ys[keepy], Y[keepy]
                    c = P[np.ix_(xs + 1, ys + 1)]
                    nx = P[np.ix_(xs + 1 + sx, ys + 1)]
                    ny = P[np.ix_(xs + 1, ys + 1 + sy)]
                    nd = P[np.ix_(xs + 1 + sx, ys + 1 + sy)]
                    out[i][np.ix_(X, Y)] = own * c + side * (nx + ny) + diag * nd
        corners = self.quads[:, 0, 0]
        for i in range(self.n):
            out[i, 0, 0] = sum(wn[d] * corners[(i + d) % self.n] for d in range(self.n))
        return SectorNet("dual", out)

    def _refine_primal(self, s: SchemeDescriptor, k: int) -> "SectorNet":
        R = self.R
        r4 = primal_rules(s, k, 4)
        rn = primal_rules(s, k, self.n)
        R2 = 2 * R - 1
        out = np.zeros((self.n, R2, R2 + 1, self.dim))
        for i in range(self.n):
            P = self._padded(i)  # index x + 1, covers -1..R

            def at(dx: int, dy: int, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
                return P[np.ix_(xs + 1 + dx, ys + 1 + dy)]

            # vertex points at (x, y), x in 1..R-1, y in 0..R-1
            xs, ys = np.arange(1, R), np.arange(0, R)
            v = (
                r4.vertex_centre * at(0, 0, xs, ys)
                + r4.vertex_edge * (at(1, 0, xs, ys) + at(-1, 0, xs, ys) + at(0, 1, xs, ys) + at(0, -1, xs, ys))
                + r4.vertex_face * (at(1, 1, xs, ys) + at(1, -1, xs, ys) + at(-1, 1, xs, ys) + at(-1, -1, xs, ys))
            )
            out[i][np.ix_(2 * xs - 1, 2 * ys)] = v
            # edges along x between (x, y) and (x+1, y), x in 0..R-1, y in 0..R-1
            xs, ys = np.arange(0, R), np.arange(0, R)
            eh = r4.edge_end * (at(0, 0, xs, ys) + at(1, 0, xs, ys)) + r4.edge_side * (
                at(0, -1, xs, ys) + at(1, -1, xs, ys) + at(0, 1, xs, ys) + at(1, 1, xs, ys)
            )
            out[i][np.ix_(2 * xs, 2 * ys)] = eh
            # edges along y between (x, y) and (x, y+1), x in 1..R-1, y in 0..R-1
            xs = np.arange(1, R)
            ev = r4.edge_end * (at(0, 0, xs, ys) + at(0, 1, xs, ys)) + r4.edge_side * (
                at(-1, 0, xs, ys) + at(-1, 1, xs, ys) + at(1, 0, xs, ys) + at(1, 1, xs, ys)
            )
            out[i][np.ix_(2 * xs - 1, 2 * ys + 1)] = ev
            # faces with lower-left corner (x, y), x, y in 0..R-1
            xs = np.arange(0, R)
            fp = r4.face * (at(0, 0, xs, ys) + at(1, 0, xs, ys) + at(0, 1, xs, ys) + at(1, 1, xs, ys))
            out[i][np.ix_(2 * xs, 2 * ys + 1)] = fp
        e = self.quads[:, 0, 0].sum(axis=0)
        f = self.quads[:, 0, 1].sum(axis=0)
        centre = rn.vertex_centre * self.centre + rn.vertex_edge * e + rn.vertex_face * f
        return SectorNet("primal", out, centre)

    # ------------------------------------------------------------ ring cells

    def ring_cells(self) -> np.ndarray:
        """Control grids of the three cells per sector next to the inner region.

        Dual nets: 3x3 grids, one level finer than the ring scale, for the
        cells [1,2]x[0,1], [1,2]x[1,2], [0,1]x[1,2]; needs R >= 3.
        Primal nets: 5x5 grids two levels finer, so that each cell covers 2x2
        fine cells and no stencil touches the centre; needs R >= 5.
        Returns shape (3n, m, m, dim), ordered sector by sector.
        """
        cells = []
        for i in range(self.n):
            if self.kind == "primal":
                cells.append(self.gather(i, range(1, 6), range(-1, 4)))
                cells.append(self.gather(i, range(1, 6), range(1, 6)))
                cells.append(self.gather(i, range(-1, 4), range(1, 6)))
            else:
                cells.append(self.gather(i, range(0, 3), range(-1, 2)))
                cells.append(self.gather(i, range(0, 3), range(0, 3)))
                cells.append(self.gather(i, range(-1, 2), range(0, 3)))
        return np.array(cells)


CELL_ORIGINS = ((1, 0), (1, 1), (0, 1))


def refine_cells(cells: np.ndarray, scheme: SchemeDescriptor, first_level: int, depth: int) -> np.ndarray:
    """Refine regular cell control grids ``depth`` times and return node samples.

    ``cells`` has shape (batch, m, m, dim). The result has shape
    (batch, 2**depth + 1, 2**depth + 1, dim): for primal schemes the deepest
    control points at the cell nodes, for dual schemes the averages of the
    four deepest control points around each node.
    """
    g = np.asarray(cells, dtype=float)
    for t in range(depth):
        u = regular_factor(scheme, first_level + t)
        g = _refine_axis(g, u, scheme.kind, axis=1)
        g = _refine_axis(g, u, scheme.kind, axis=2)
    if scheme.kind == "primal":
        return g[:, 1:-1, 1:-1]
    return 0.25 * (g[:, :-1, :-1] + g[:, 1:, :-1] + g[:, :-1, 1:] + g[:, 1:, 1:])


def _refine_axis(g: np.ndarray, u: np.ndarray, kind: str, axis: int) -> np.ndarray:
    g = np.moveaxis(g, axis, 0)
    M = g.shape[0]
    if kind == "primal":
        w0, w1, w2 = u[0], u[1], u[2]
        out = np.empty((2 * M - 3,) + g.shape[1:])
        out[0::2] = w1 * (g[:-1] + g[1:])
        out[1::2] = w0 * (g[:-2] + g[2:]) + w2 * g[1:-1]
    else:
        u0, u1 = u[0], u[1]
        out = np.empty((2 * M - 2,) + g.shape[1:])
        out[0::2] = u1 * g[:-1] + u0 * g[1:]
        out[1::2] = u0 * g[:-1] + u1 * g[1:]
    return np.moveaxis(out, 0, axis)
