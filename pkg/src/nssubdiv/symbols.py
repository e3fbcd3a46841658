"""Bivariate subdivision masks, their Laurent symbols and mask-sequence diagnostics.

A mask is a finite grid of coefficients ``c[alpha]`` anchored at an integer
``offset``; entry ``coeffs[i, j]`` is ``c[(offset[0] + i, offset[1] + j)]``.
One refinement step with mask ``c`` maps data ``f`` to
``f_new[alpha] = sum_beta c[alpha - 2 beta] f[beta]``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.signal import convolve2d

from .errors import ComplexCoefficients, NotDivisible

DIVISION_TOL = 1e-12
IMAG_TOL = 1e-12


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    if out.ndim != 2:
        raise ValueError(f"coefficients must be 2-D, got shape {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Mask2D:
    """Real coefficient grid with an integer anchor."""

    coeffs: np.ndarray
    offset: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _frozen(self.coeffs, float))
        object.__setattr__(self, "offset", (int(self.offset[0]), int(self.offset[1])))

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.coeffs))

    def aligned(self, other: "Mask2D") -> tuple[np.ndarray, np.ndarray, tuple[int, int]]:
        """Both coefficient grids zero-padded onto a common index box."""
        lo = tuple(min(a, b) for a, b in zip(self.offset, other.offset))
        hi = tuple(
            max(a + s, b + t)
            for a, s, b, t in zip(self.offset, self.shape, other.offset, other.shape)
        )
        size = (hi[0] - lo[0], hi[1] - lo[1])
        out = []
        for m in (self, other):
            g = np.zeros(size)
            i0, j0 = m.offset[0] - lo[0], m.offset[1] - lo[1]
            g[i0:i0 + m.shape[0], j0:j0 + m.shape[1]] = m.coeffs
            out.append(g)
        return out[0], out[1], lo

    def __sub__(self, other: "Mask2D") -> "Mask2D":
        a, b, lo = self.aligned(other)
        return Mask2D(a - b, lo)

    def __add__(self, other: "Mask2D") -> "Mask2D":
        a, b, lo = self.aligned(other)
        return Mask2D(a + b, lo)

    def scaled(self, factor: float) -> "Mask2D":
        return Mask2D(self.coeffs * factor, self.offset)

    def coset_sums(self) -> np.ndarray:
        """Signed sums over the four residue classes of alpha mod 2, indexed [a1 % 2, a2 % 2]."""
        sums = np.zeros((2, 2))
        for r1 in range(2):
            for r2 in range(2):
                s1 = (r1 - self.offset[0]) % 2
                s2 = (r2 - self.offset[1]) % 2
                sums[r1, r2] = self.coeffs[s1::2, s2::2].sum()
        return sums

    def to_dict(self) -> dict:
        return {"offset": list(self.offset), "coefficients": self.coeffs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Mask2D":
        return cls(np.array(d["coefficients"], dtype=float), tuple(d["offset"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Mask2D":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class LaurentSymbol:
    """Complex Laurent polynomial ``sum c[alpha] z1**alpha1 z2**alpha2``."""

    coeffs: np.ndarray
    offset: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _frozen(self.coeffs, complex))
        object.__setattr__(self, "offset", (int(self.offset[0]), int(self.offset[1])))

    @classmethod
    def from_mask(cls, mask: Mask2D) -> "LaurentSymbol":
        return cls(mask.coeffs, mask.offset)

    @classmethod
    def monomial_factor(cls, coeffs1d: Sequence[complex], axis: int) -> "LaurentSymbol":
        """Univariate polynomial in z1 (axis 0) or z2 (axis 1), lowest power first."""
        c = np.asarray(coeffs1d, dtype=complex)
        grid = c.reshape(-1, 1) if axis == 0 else c.reshape(1, -1)
        return cls(grid, (0, 0))

    def to_mask(self, tol: float = IMAG_TOL) -> Mask2D:
        worst = float(np.max(np.abs(self.coeffs.imag), initial=0.0))
        if worst > tol:
            raise ComplexCoefficients(f"imaginary part {worst:.3e} exceeds {tol:.1e}")
        return Mask2D(self.coeffs.real, self.offset)

    def __mul__(self, other: "LaurentSymbol | complex") -> "LaurentSymbol":
        if isinstance(other, LaurentSymbol):
            prod = convolve2d(self.coeffs, other.coeffs, mode="full")
            return LaurentSymbol(prod, (self.offset[0] + other.offset[0], self.offset[1] + other.offset[1]))
        return LaurentSymbol(self.coeffs * other, self.offset)

    __rmul__ = __mul__

    def __call__(self, z1: complex, z2: complex) -> complex:
        n1, n2 = self.coeffs.shape
        p1 = z1 ** (self.offset[0] + np.arange(n1))
        p2 = z2 ** (self.offset[1] + np.arange(n2))
        return complex(p1 @ self.coeffs @ p2)


def operator_norm(c: Mask2D) -> float:
    """Max over the four cosets of the absolute coefficient sums."""
    return float(Mask2D(np.abs(c.coeffs), c.offset).coset_sums().max())


def mask_distance(a: Mask2D, b: Mask2D) -> float:
    x, y, _ = a.aligned(b)
    return float(np.max(np.abs(x - y), initial=0.0))


def divided_difference_symbol(c: LaurentSymbol, direction: int, tol: float = DIVISION_TOL) -> LaurentSymbol:
    """Symbol ``b`` with ``(1 + z_j) b(z) = 2 c(z)``, ``direction`` being 1 or 2.

    Synthetic division along axis ``j``, one line of coefficients at a time:
    ``b_0 = 2 c_0`` and ``b_i = 2 c_i - b_(i-1)``; the leftover ``2 c_m - b_(m-1)``
    is the remainder.
    """
    if direction not in (1, 2):
        raise ValueError("direction must be 1 or 2")
    axis = direction - 1
    grid = np.moveaxis(c.coeffs, axis, 0)
    m = grid.shape[0]
    if m < 2:
        raise NotDivisible(f"symbol has degree 0 in z{direction}")
    b = np.zeros((m - 1,) + grid.shape[1:], dtype=complex)
    b[0] = 2 * grid[0]
    for i in range(1, m - 1):
        b[i] = 2 * grid[i] - b[i - 1]
    remainder = 2 * grid[m - 1] - b[m - 2]
    worst = float(np.max(np.abs(remainder)))
    if worst > tol:
        raise NotDivisible(f"remainder {worst:.3e} after dividing by (1+z{direction}) exceeds {tol:.1e}")
    return LaurentSymbol(np.moveaxis(b, 0, axis), c.offset)


def multiply_by_one_plus(b: LaurentSymbol, direction: int) -> LaurentSymbol:
    """``(1 + z_j) b(z) / 2``; the inverse of divided_difference_symbol."""
    factor = LaurentSymbol.monomial_factor([0.5, 0.5], direction - 1)
    return b * factor


def has_smoothing_factor(c: LaurentSymbol, tol: float = DIVISION_TOL) -> bool:
    for direction in (1, 2):
        try:
            divided_difference_symbol(c, direction, tol)
        except NotDivisible:
            return False
    return True


def subdivide(values: np.ndarray, origin: tuple[int, int], mask: Mask2D) -> tuple[np.ndarray, tuple[int, int]]:
    """One refinement step on finitely supported grid data.

    ``values`` has shape (n1, n2) or (n1, n2, d); ``origin`` is the index of
    ``values[0, 0]``. Returns the full support of the refined data and its origin.
    """
    vals = np.asarray(values, dtype=float)
    squeeze = vals.ndim == 2
    if squeeze:
        vals = vals[..., None]
    n1, n2, dim = vals.shape
    up = np.zeros((2 * n1 - 1, 2 * n2 - 1, dim))
    up[::2, ::2] = vals
    out = np.stack([convolve2d(up[..., d], mask.coeffs, mode="full") for d in range(dim)], axis=-1)
    new_origin = (2 * origin[0] + mask.offset[0], 2 * origin[1] + mask.offset[1])
    return (out[..., 0] if squeeze else out), new_origin


@dataclass
class EquivalenceEstimate:
    """Partial sums of (2^k)^order times the operator-norm distance to a reference mask."""

    order: int
    k_max: int
    terms: list[float]
    partial_sums: list[float]
    tail_ratio: float
    verdict: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "k_max": self.k_max,
            "terms": self.terms,
            "partial_sums": self.partial_sums,
            "tail_ratio": self.tail_ratio,
            "verdict": self.verdict,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "term", "partial_sum"])
        for k, (t, p) in enumerate(zip(self.terms, self.partial_sums), start=1):
            w.writerow([k, f"{t:.17g}", f"{p:.17g}"])
        return buf.getvalue()


def fit_geometric_ratio(terms: Sequence[float]) -> float:
    """Ratio r of a least-squares fit terms[k] ~ C r^k over the strictly positive entries.

    Returns 0.0 when fewer than three entries are positive (the tail has vanished).
    """
    t = np.asarray(terms, dtype=float)
    ks = np.arange(t.size)
    keep = t > 0
    if keep.sum() < 3:
        return 0.0
    slope = np.polyfit(ks[keep], np.log(t[keep]), 1)[0]
    return float(math.exp(slope))


def asymptotic_equivalence(
    order: int,
    masks: Callable[[int], Mask2D],
    reference: Mask2D,
    k_max: int = 50,
    tail: int = 10,
) -> EquivalenceEstimate:
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    if k_max < 8:
        raise ValueError("k_max must be at least 8")
    terms: list[float] = []
    sums: list[float] = []
    total = 0.0
    for k in range(1, k_max + 1):
        t = (2.0 ** k) ** order * operator_norm(masks(k) - reference)
        total += t
        terms.append(t)
        sums.append(total)
    ratio = fit_geometric_ratio(terms[-tail:])
    notes: list[str] = []
    last = terms[-1]
    if total == 0.0:
        verdict = "converged"
        notes.append("all distances are zero")
    elif ratio < 1.0 and last < 1e-10 * total:
        verdict = "converged"
    elif ratio >= 1.0:
        verdict = "diverging"
    else:
        verdict = "inconclusive"
        notes.append(f"last increment {last:.3e} not below 1e-10 of the partial sum")
    return EquivalenceEstimate(order, k_max, terms, sums, ratio, verdict, notes)
