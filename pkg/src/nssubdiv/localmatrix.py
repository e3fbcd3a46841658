"""Block-circulant local subdivision matrices around an extraordinary element.

The dense realization of ``Circ(B_0, ..., B_(n-1))`` has block ``(i, j)`` equal
to ``B_((j - i) mod n)``, so block row 1 starts with ``B_(n-1)``.

For vertex-centred schemes the centre point is replicated once per sector and
weighted by ``1/n`` so that the matrix stays block-circulant; such matrices
carry ``replicated_centre=True`` and their spectra drop the ``n - 1`` zero
eigenvalues that the replication adds.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import AllBelowNoiseFloor, GateFailed, NotConverged, ShapeMismatch, SingularMatrix
from .schemes import DualBlocks, PrimalBlocks, SchemeDescriptor, local_blocks

EPS = np.finfo(float).eps
NOISE_FLOOR = 1e3 * EPS


@dataclass(frozen=True, eq=False)
class BlockCirculantMatrix:
    n: int
    m: int
    blocks: np.ndarray  # shape (n, m, m)
    replicated_centre: bool = False

    def __post_init__(self) -> None:
        b = np.array(self.blocks, dtype=float)
        if b.shape != (self.n, self.m, self.m):
            raise ShapeMismatch(f"blocks have shape {b.shape}, expected {(self.n, self.m, self.m)}")
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @property
    def size(self) -> int:
        return self.n * self.m

    @cached_property
    def dense(self) -> np.ndarray:
        n, m = self.n, self.m
        out = np.empty((n * m, n * m))
        for i in range(n):
            for j in range(n):
                out[i * m:(i + 1) * m, j * m:(j + 1) * m] = self.blocks[(j - i) % n]
        out.setflags(write=False)
        return out

    def norm_inf(self) -> float:
        # every block row holds each B_j exactly once
        return float(np.abs(self.blocks).sum(axis=(0, 2)).max())

    def __matmul__(self, d: np.ndarray) -> np.ndarray:
        return self.dense @ d

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "replicated_centre": self.replicated_centre,
            "blocks": self.blocks.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "BlockCirculantMatrix":
        return cls(d["n"], d["m"], np.array(d["blocks"]), d["replicated_centre"])


def assemble_face_matrix(blocks: Sequence[np.ndarray] | DualBlocks) -> BlockCirculantMatrix:
    if isinstance(blocks, DualBlocks):
        blocks = blocks.blocks
    arrs = [np.asarray(b, dtype=float) for b in blocks]
    n = len(arrs)
    if n < 3:
        raise ShapeMismatch(f"need at least 3 blocks, got {n}")
    m = arrs[0].shape[0]
    for b in arrs:
        if b.shape != (m, m):
            raise ShapeMismatch(f"block shape {b.shape} differs from {(m, m)}")
    return BlockCirculantMatrix(n, m, np.stack(arrs))


def assemble_vertex_matrix(
    alpha: float, beta: np.ndarray, gamma: np.ndarray, blocks: Sequence[np.ndarray]
) -> BlockCirculantMatrix:
    """Blocks ``[[alpha/n, beta^T], [gamma/n, B_j]]`` of size p + 1."""
    beta = np.asarray(beta, dtype=float).ravel()
    gamma = np.asarray(gamma, dtype=float).ravel()
    n = len(blocks)
    if n < 3:
        raise ShapeMismatch(f"need at least 3 blocks, got {n}")
    p = beta.size
    if gamma.size != p:
        raise ShapeMismatch(f"beta has {p} entries, gamma has {gamma.size}")
    out = np.zeros((n, p + 1, p + 1))
    for j, b in enumerate(blocks):
        b = np.asarray(b, dtype=float)
        if b.shape != (p, p):
            raise ShapeMismatch(f"block shape {b.shape} differs from {(p, p)}")
        out[j, 0, 0] = alpha / n
        out[j, 0, 1:] = beta
        out[j, 1:, 0] = gamma / n
        out[j, 1:, 1:] = b
    return BlockCirculantMatrix(n, p + 1, out, replicated_centre=True)


def assemble(scheme: SchemeDescriptor, k: int, n: int) -> BlockCirculantMatrix:
    blocks = local_blocks(scheme, k, n)
    if isinstance(blocks, PrimalBlocks):
        return assemble_vertex_matrix(blocks.alpha, blocks.beta, blocks.gamma, blocks.blocks)
    return assemble_face_matrix(blocks)


def stationary_matrix(scheme: SchemeDescriptor, n: int) -> BlockCirculantMatrix:
    """Matrix of the stationary counterpart, normalized like ``scheme``."""
    return assemble(scheme.stationary_counterpart(), 1, n)


def replicate_centre(d: np.ndarray, n: int) -> np.ndarray:
    """Map ``[centre, sector_0, ..., sector_(n-1)]`` (p n + 1 rows) to the replicated layout."""
    d = np.asarray(d, dtype=float)
    centre, rest = d[:1], d[1:]
    p = rest.shape[0] // n
    parts = []
    for i in range(n):
        parts.append(centre)
        parts.append(rest[i * p:(i + 1) * p])
    return np.concatenate(parts, axis=0)


def collapse_centre(d: np.ndarray, n: int) -> np.ndarray:
    """Inverse of replicate_centre; the centre copies are averaged."""
    d = np.asarray(d, dtype=float)
    m = d.shape[0] // n
    blocks = [d[i * m:(i + 1) * m] for i in range(n)]
    copies = np.array([b[:1] for b in blocks])
    centre = copies[0] if np.all(copies == copies[0]) else copies.mean(axis=0)
    return np.concatenate([centre] + [b[1:] for b in blocks], axis=0)


# ---------------------------------------------------------------- spectra


def fourier_block_diagonalize(S: BlockCirculantMatrix) -> list[np.ndarray]:
    """Blocks ``sum_j B_j w**j`` for ``w = exp(2 pi i l / n)``, l = 0..n-1.

    The vector with block j equal to ``w**j x`` is an eigenvector of the dense
    matrix whenever ``x`` is an eigenvector of block l.
    """
    n = S.n
    out = []
    for l in range(n):
        w = np.exp(2j * np.pi * l * np.arange(n) / n)
        out.append(np.tensordot(w, S.blocks, axes=(0, 0)))
    return out


def _reduced_blocks(S: BlockCirculantMatrix) -> list[np.ndarray]:
    blocks = fourier_block_diagonalize(S)
    if not S.replicated_centre:
        return blocks
    # off the invariant frequency the centre row and column vanish identically
    return [blocks[0]] + [b[1:, 1:] for b in blocks[1:]]


@dataclass
class EigenCluster:
    value: complex
    algebraic: int
    geometric: int | None
    frequencies: list[int]


@dataclass
class Spectrum:
    eigenvalues: np.ndarray  # sorted by decreasing modulus
    frequencies: np.ndarray  # Fourier index each eigenvalue came from
    clusters: list[EigenCluster]
    lambda0: complex
    lambda1: complex
    x0: np.ndarray
    x0_left: np.ndarray
    x1: np.ndarray | None  # (N, 2) real subdominant eigenvectors
    cluster_tol: float
    min_singular_value: float
    ones_error: float
    flags: dict[str, bool] = field(default_factory=dict)

    @property
    def gate_convergence(self) -> bool:
        return self.flags["dominant_is_one"] and self.flags["dominant_simple"] and self.flags["all_ones_eigenvector"]

    @property
    def gate_normal(self) -> bool:
        return self.gate_convergence and self.flags["subdominant_real_double_nondefective"] and self.flags["subdominant_in_unit_interval"]

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "frequencies": [int(f) for f in self.frequencies],
            "clusters": [
                {
                    "value": [float(c.value.real), float(c.value.imag)],
                    "algebraic": c.algebraic,
                    "geometric": c.geometric,
                    "frequencies": c.frequencies,
                }
                for c in self.clusters
            ],
            "lambda0": [float(self.lambda0.real), float(self.lambda0.imag)],
            "lambda1": [float(self.lambda1.real), float(self.lambda1.imag)],
            "cluster_tol": self.cluster_tol,
            "min_singular_value": self.min_singular_value,
            "ones_error": self.ones_error,
            "flags": dict(sorted(self.flags.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _sort_order(vals: np.ndarray) -> np.ndarray:
    # decreasing modulus, ties by decreasing real part then increasing imaginary part
    return np.lexsort((np.round(vals.imag, 12), -np.round(vals.real, 12), -np.round(np.abs(vals), 12)))


def _lift(S: BlockCirculantMatrix, l: int, w: np.ndarray) -> np.ndarray:
    """Dense eigenvector from an eigenvector of reduced Fourier block l."""
    if S.replicated_centre and l != 0:
        w = np.concatenate([[0.0], w])
    phase = np.exp(2j * np.pi * l * np.arange(S.n) / S.n)
    return np.concatenate([ph * w for ph in phase])


def _nullity(A: np.ndarray, thresh: float) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s <= thresh))


def spectrum(S: BlockCirculantMatrix, tol: float = 1e-8) -> Spectrum:
    """Eigen-analysis through the Fourier blocks, with dense rank tests for multiplicities.

    ``tol`` is relative to ``||S||_inf`` and serves as clustering radius,
    rank threshold and singularity threshold.
    """
    norm = S.norm_inf()
    thresh = tol * norm
    reduced = _reduced_blocks(S)
    smin = min(float(np.linalg.svd(b, compute_uv=False).min()) for b in reduced)
    if smin <= thresh:
        raise SingularMatrix(f"smallest singular value {smin:.3e} <= {thresh:.3e}")

    vals, freqs = [], []
    for l, b in enumerate(reduced):
        ev = np.linalg.eigvals(b)
        vals.extend(ev)
        freqs.extend([l] * ev.size)
    vals = np.array(vals, dtype=complex)
    freqs = np.array(freqs)
    order = _sort_order(vals)
    vals, freqs = vals[order], freqs[order]

    clusters: list[EigenCluster] = []
    used = np.zeros(vals.size, dtype=bool)
    for i in range(vals.size):
        if used[i]:
            continue
        members = np.where(~used & (np.abs(vals - vals[i]) <= thresh))[0]
        used[members] = True
        clusters.append(EigenCluster(complex(vals[members].mean()), int(members.size), None, sorted(int(f) for f in freqs[members])))

    dense = S.dense
    eye = np.eye(S.size)
    for c in clusters[:2]:
        c.geometric = _nullity(dense - c.value * eye, thresh)

    lam0 = clusters[0].value
    lam1 = clusters[1].value if len(clusters) > 1 else 0j

    # dominant right and left eigenvectors from the invariant frequency
    b0 = reduced[0]
    ev, vr = np.linalg.eig(b0)
    i0 = int(np.argmin(np.abs(ev - lam0)))
    x0 = np.real_if_close(vr[:, i0]).real
    x0 = x0 / x0[np.argmax(np.abs(x0))]
    x0 = np.tile(x0, S.n)
    evl, vl = np.linalg.eig(b0.T)
    il = int(np.argmin(np.abs(evl - lam0)))
    y = np.tile(vl[:, il].real, S.n)
    x0_left = y / (y @ x0)
    ones_error = float(np.max(np.abs(x0 - 1.0)))

    x1 = _subdominant_vectors(S, reduced, clusters[1]) if len(clusters) > 1 else None

    flags = {
        "dominant_is_one": abs(lam0 - 1.0) <= 1e-10,
        "dominant_simple": clusters[0].algebraic == 1,
        "all_ones_eigenvector": ones_error <= 1e-10 and 0 in clusters[0].frequencies,
        "subdominant_real": abs(lam1.imag) <= 1e-10,
        "subdominant_double": len(clusters) > 1 and clusters[1].algebraic == 2,
        "subdominant_nondefective": len(clusters) > 1 and clusters[1].geometric == clusters[1].algebraic,
        "subdominant_in_unit_interval": 0.0 < lam1.real < 1.0,
        "subdominant_above_half": 0.5 < lam1.real < 1.0,
    }
    flags["subdominant_real_double_nondefective"] = (
        flags["subdominant_real"] and flags["subdominant_double"] and flags["subdominant_nondefective"]
    )
    return Spectrum(vals, freqs, clusters, lam0, lam1, x0, x0_left, x1, thresh, smin, ones_error, flags)


def _subdominant_vectors(S: BlockCirculantMatrix, reduced: list[np.ndarray], c: EigenCluster) -> np.ndarray | None:
    if c.algebraic != 2:
        return None
    f = c.frequencies
    if f[0] != 0 and f[0] + f[1] == S.n and f[0] != f[1]:
        l = f[0]
        ev, vr = np.linalg.eig(reduced[l])
        i = int(np.argmin(np.abs(ev - c.value)))
        x = _lift(S, l, vr[:, i])
        # fix the free complex phase so the result does not depend on LAPACK
        x = x * np.exp(-1j * np.angle(x[np.argmax(np.abs(x))]))
        return np.column_stack([x.real, x.imag])
    # generic case: real null space of the dense matrix
    _, s, vt = np.linalg.svd(S.dense - c.value.real * np.eye(S.size))
    return vt[-2:].T.copy()


# ---------------------------------------------------------------- products


def product_chain(scheme: SchemeDescriptor, n: int, k: int) -> np.ndarray:
    """Dense ``S_k S_(k-1) ... S_1``; the identity for k = 0."""
    if k < 0:
        raise ValueError("k must be >= 0")
    size = n * scheme.block_size
    out = np.eye(size)
    for j in range(1, k + 1):
        out = assemble(scheme, j, n).dense @ out
    return out


def product_norms(scheme: SchemeDescriptor, n: int, k_max: int) -> list[float]:
    """``||S^(k)||_inf`` for k = 1..k_max."""
    size = n * scheme.block_size
    P = np.eye(size)
    out = []
    for j in range(1, k_max + 1):
        P = assemble(scheme, j, n).dense @ P
        out.append(float(np.abs(P).sum(axis=1).max()))
    return out


def _inf(A: np.ndarray) -> float:
    return float(np.abs(A).sum(axis=1).max())


def recurrence_check(M_seq: Sequence[np.ndarray], M: np.ndarray, k: int) -> tuple[float, float]:
    """Residual of ``M^(k) = M^k + sum_j M^(k-j) (M_j - M) M^(j-1)`` and the largest norm involved.

    ``M_seq[j - 1]`` is ``M_j``; ``M^(j)`` denotes ``M_j ... M_1``.
    """
    if k < 0 or k > len(M_seq):
        raise ValueError(f"k={k} outside 0..{len(M_seq)}")
    size = M.shape[0]
    powers = [np.eye(size)]
    for _ in range(k):
        powers.append(M @ powers[-1])
    chain = [np.eye(size)]
    for j in range(1, k + 1):
        chain.append(M_seq[j - 1] @ chain[-1])
    rhs = powers[k].copy()
    scale = max(_inf(powers[k]), _inf(chain[k]))
    for j in range(1, k + 1):
        term = powers[k - j] @ (M_seq[j - 1] - M) @ chain[j - 1]
        scale = max(scale, _inf(term), _inf(powers[k - j]), _inf(chain[j - 1]))
        rhs += term
    return _inf(chain[k] - rhs), scale


def recurrence_residual(M_seq: Sequence[np.ndarray], M: np.ndarray, k: int) -> float:
    return recurrence_check(M_seq, M, k)[0]


# ---------------------------------------------------------------- decay


@dataclass
class DecayFit:
    ks: list[int]
    norms: list[float]
    usable: list[bool]
    sigma: float
    C: float
    residual: float
    sigma_band: tuple[float, float]
    fitted: list[float]

    def to_dict(self) -> dict:
        return {
            "k": self.ks,
            "norm": self.norms,
            "usable": self.usable,
            "sigma": self.sigma,
            "C": self.C,
            "residual": self.residual,
            "sigma_band": list(self.sigma_band),
            "fitted": self.fitted,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "norm", "fitted"])
        for k, v, f in zip(self.ks, self.norms, self.fitted):
            w.writerow([k, f"{v:.17g}", f"{f:.17g}"])
        return buf.getvalue()


def difference_norms(scheme: SchemeDescriptor, n: int, ks: Sequence[int]) -> list[float]:
    S = stationary_matrix(scheme, n).dense
    return [_inf(assemble(scheme, k, n).dense - S) for k in ks]


def decay_fit(
    scheme: SchemeDescriptor, n: int, k_range: Sequence[int] = range(1, 16), noise_floor: float = NOISE_FLOOR
) -> DecayFit:
    """Least-squares fit ``log ||S_k - S||_inf = log C - k log sigma``."""
    ks = list(k_range)
    if len(ks) < 5:
        raise ValueError("k_range needs at least 5 levels")
    norms = difference_norms(scheme, n, ks)
    usable = [v > noise_floor for v in norms]
    kk = np.array([k for k, u in zip(ks, usable) if u], dtype=float)
    yy = np.log([v for v, u in zip(norms, usable) if u])
    if kk.size < 5:
        raise AllBelowNoiseFloor(f"only {kk.size} of {len(ks)} differences exceed {noise_floor:.2e}")
    (slope, intercept), cov = np.polyfit(kk, yy, 1, cov=True)
    resid = yy - (slope * kk + intercept)
    half = 1.96 * math.sqrt(max(cov[0, 0], 0.0))
    sigma = math.exp(-slope)
    fitted = [math.exp(intercept + slope * k) for k in ks]
    return DecayFit(
        ks, norms, usable, sigma, math.exp(intercept), float(np.sqrt(np.mean(resid ** 2))),
        (math.exp(-slope - half), math.exp(-slope + half)), fitted,
    )


# ---------------------------------------------------------------- limit point


@dataclass
class LimitPoint:
    q0: np.ndarray
    beta0: np.ndarray
    r_c: np.ndarray
    k_used: int
    increments: list[float]  # ||y_(k+1) - y_k||_inf, k = 1..
    ratios: list[float]  # successive increment ratios
    deviations: list[float]  # ||y_k - 1 beta0^T||_inf
    # same with y_k projected on the dominant left eigenvector, i.e. the part that converges to beta0
    projected_increments: list[float] = field(default_factory=list)
    projected_ratios: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "q0": self.q0.tolist(),
            "beta0": self.beta0.tolist(),
            "r_c": self.r_c.tolist(),
            "k_used": self.k_used,
            "increments": self.increments,
            "ratios": self.ratios,
            "deviations": self.deviations,
            "projected_increments": self.projected_increments,
            "projected_ratios": self.projected_ratios,
        }


def limit_point(
    scheme: SchemeDescriptor,
    n: int,
    d1: np.ndarray,
    tol: float = 1e-14,
    k_max: int = 200,
    spec: Spectrum | None = None,
) -> LimitPoint:
    """Limit of the control points at the centre: ``q0 + beta0``.

    ``q0`` comes from the stationary matrix; ``beta0`` is the mean of
    ``y_k = S^(k) d1 - S^k d1`` once its increments fall below ``tol * ||d1||``.
    """
    d1 = np.asarray(d1, dtype=float)
    S = stationary_matrix(scheme, n)
    if spec is None:
        spec = spectrum(S)
    if not spec.gate_convergence:
        raise GateFailed(f"stationary spectrum gate failed for n={n}: {spec.flags}")
    if not scheme.is_stationary:
        fit = decay_fit(scheme, n)
        if not fit.sigma > 1.0:
            raise GateFailed(f"decay gate failed: sigma={fit.sigma:.3f}")
    q0 = d1.T @ spec.x0_left
    scale = max(float(np.max(np.abs(d1))), np.finfo(float).tiny)
    Sd = S.dense
    P = d1.copy()
    Q = d1.copy()
    y_prev = np.zeros_like(d1)
    ys = []
    increments: list[float] = []
    converged = False
    k = 0
    for k in range(1, k_max + 1):
        P = assemble(scheme, k, n).dense @ P
        Q = Sd @ Q
        y = P - Q
        ys.append(y)
        inc = float(np.max(np.abs(y - y_prev)))
        if k > 1:
            increments.append(inc)
            if inc < tol * scale:
                converged = True
                break
        elif inc == 0.0:
            converged = True
            break
        y_prev = y
    if not converged:
        raise NotConverged(f"increment still {increments[-1]:.3e} after {k_max} levels")
    y_last = ys[-1]
    beta0 = y_last.T @ spec.x0 / S.size
    ratios = [b / a for a, b in zip(increments, increments[1:]) if a > 0]
    ones = np.ones((S.size, 1))
    deviations = [float(np.max(np.abs(yk - ones * beta0))) for yk in ys]
    proj = [float(np.max(np.abs((b - a).T @ spec.x0_left))) for a, b in zip(ys, ys[1:])]
    proj_ratios = [b / a for a, b in zip(proj, proj[1:]) if a > 0]
    return LimitPoint(q0, beta0, q0 + beta0, k, increments, ratios, deviations, proj, proj_ratios)
