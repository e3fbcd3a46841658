"""Named subdivision schemes as level-indexed generators of masks and local blocks.

Four families are supported:

* ``ds``: stationary Doo-Sabin (dual, face-centred local blocks of size 4).
* ``cc``: stationary Catmull-Clark (primal, vertex-centred blocks of size 6 plus centre).
* ``trig-ds:h=<r>``: level-dependent Doo-Sabin reproducing trigonometric functions,
  ``0 <= h < pi/3``.
* ``exp-cc:theta=<r>`` or ``exp-cc:theta=<r>i``: level-dependent Catmull-Clark
  reproducing exponentials, with real ``0 <= theta < pi`` or imaginary
  ``theta = i*t``, ``0 < t < 2*acosh(500)``.

``skew-ds:eps=<r>`` is a diagnostic counterexample: the stationary Doo-Sabin
blocks paired with regular masks whose symbol lacks the ``(1 + z2)`` factor.

All coefficients at the degenerate parameter (``h = 0`` or ``theta = 0``)
coincide with the stationary schemes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import InvalidParameter, NonConstantCosetSums, UnsupportedValence
from .symbols import Mask2D

COSET_TOL = 1e-12
TRIG_H_MAX = math.pi / 3
EXP_REAL_MAX = math.pi
EXP_IMAG_MAX = 2 * math.acosh(500.0)


@dataclass(frozen=True)
class TrigParam:
    h: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.h < TRIG_H_MAX):
            raise InvalidParameter(f"h={self.h} outside [0, pi/3)")


@dataclass(frozen=True)
class ExpParam:
    """Real ``theta`` or purely imaginary ``theta = i * magnitude``."""

    magnitude: float
    imaginary: bool = False

    def __post_init__(self) -> None:
        if self.imaginary:
            if not (0.0 < self.magnitude < EXP_IMAG_MAX):
                raise InvalidParameter(f"imaginary theta {self.magnitude}i outside i(0, 2 acosh(500))")
        elif not (0.0 <= self.magnitude < EXP_REAL_MAX):
            raise InvalidParameter(f"theta={self.magnitude} outside [0, pi)")

    def text(self) -> str:
        return f"{self.magnitude:g}i" if self.imaginary else f"{self.magnitude:g}"


@dataclass(frozen=True)
class SkewParam:
    eps: float


Parameter = Union[None, TrigParam, ExpParam, SkewParam]

_FAMILIES = {
    "ds": ("dual", None),
    "cc": ("primal", None),
    "trig-ds": ("dual", TrigParam),
    "exp-cc": ("primal", ExpParam),
    "skew-ds": ("dual", SkewParam),
}


@dataclass(frozen=True)
class SchemeDescriptor:
    name: str
    param: Parameter = None
    normalized: bool = False

    def __post_init__(self) -> None:
        if self.name not in _FAMILIES:
            raise InvalidParameter(f"unknown scheme {self.name!r}")
        expected = _FAMILIES[self.name][1]
        if expected is None and self.param is not None:
            raise InvalidParameter(f"scheme {self.name} takes no parameter")
        if expected is not None and not isinstance(self.param, expected):
            raise InvalidParameter(f"scheme {self.name} needs a {expected.__name__}")

    @property
    def kind(self) -> str:
        return _FAMILIES[self.name][0]

    @property
    def p(self) -> int:
        return 4 if self.kind == "dual" else 6

    @property
    def block_size(self) -> int:
        return self.p if self.kind == "dual" else self.p + 1

    @property
    def is_stationary(self) -> bool:
        if self.param is None:
            return True
        if isinstance(self.param, TrigParam):
            return self.param.h == 0.0
        if isinstance(self.param, ExpParam):
            return self.param.magnitude == 0.0
        return self.param.eps == 0.0

    def stationary_counterpart(self) -> "SchemeDescriptor":
        return SchemeDescriptor("ds" if self.kind == "dual" else "cc")

    def with_normalization(self, normalized: bool) -> "SchemeDescriptor":
        return SchemeDescriptor(self.name, self.param, normalized)

    @property
    def id(self) -> str:
        if self.param is None:
            base = self.name
        elif isinstance(self.param, TrigParam):
            base = f"trig-ds:h={self.param.h:g}"
        elif isinstance(self.param, ExpParam):
            base = f"exp-cc:theta={self.param.text()}"
        else:
            base = f"skew-ds:eps={self.param.eps:g}"
        return base

    def __str__(self) -> str:
        return self.id + (" (normalized)" if self.normalized else "")


def _parse_real(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParameter(f"cannot parse number {text!r}") from exc


def parse_scheme(text: str, normalized: bool = False) -> SchemeDescriptor:
    """Parse a CLI scheme id such as ``trig-ds:h=1/16`` or ``exp-cc:theta=10i``."""
    text = text.strip()
    if ":" not in text:
        return SchemeDescriptor(text, None, normalized)
    name, _, arg = text.partition(":")
    key, _, value = arg.partition("=")
    key, value = key.strip(), value.strip()
    if name == "trig-ds" and key == "h":
        return SchemeDescriptor(name, TrigParam(_parse_real(value)), normalized)
    if name == "exp-cc" and key == "theta":
        if value.endswith("i"):
            return SchemeDescriptor(name, ExpParam(_parse_real(value[:-1]), True), normalized)
        return SchemeDescriptor(name, ExpParam(_parse_real(value)), normalized)
    if name == "skew-ds" and key == "eps":
        return SchemeDescriptor(name, SkewParam(_parse_real(value)), normalized)
    raise InvalidParameter(f"cannot parse scheme id {text!r}")


# ---------------------------------------------------------------- coefficients


def vk(param: ExpParam, k: int) -> float:
    """``cos(theta / 2^k)`` for real theta, ``cosh(|theta| / 2^k)`` for imaginary theta."""
    x = param.magnitude / 2.0 ** k
    return math.cosh(x) if param.imaginary else math.cos(x)


@dataclass(frozen=True)
class TrigCoefficients:
    a: float
    b: float
    c4: float
    cn: float | None


@dataclass(frozen=True)
class ExpCoefficients:
    v: float
    a4: float
    b4: float
    c4: float
    d: float
    e: float
    an: float | None
    bn: float | None
    cn: float | None


def trig_coefficients(h: float, k: int, n: int | None = None) -> TrigCoefficients:
    c1 = math.cos(h / 2.0 ** k)
    c0 = math.cos(h / 2.0 ** (k - 1))
    a = 1.0 / (4 * c1 * c1 * c0) + 1.0 / (4 * c1 * c1)
    b = 1.0 / (8 * c1 * c1 * c0)
    c4 = 1.0 / (16 * c1 * c1 * c0 * c0)
    cn = None if n is None else 1.0 / (4 * n * c1 * c1 * c0 * c0)
    return TrigCoefficients(a, b, c4, cn)


def exp_coefficients(param: ExpParam, k: int, n: int | None = None) -> ExpCoefficients:
    v = vk(param, k)
    w = (v + 1) ** 2
    a4 = (2 * v + 1) ** 2 / (4 * w)
    b4 = 2 * (2 * v + 1) / (16 * w)
    c4 = 1.0 / (16 * w)
    d = (2 * v + 1) / (4 * (v + 1))
    e = 1.0 / (8 * (v + 1))
    if n is None:
        return ExpCoefficients(v, a4, b4, c4, d, e, None, None, None)
    bn = 2 * (2 * v + 1) / (n * n * w)
    cn = 1.0 / (n * n * w)
    an = 1.0 - n * (bn + cn)
    return ExpCoefficients(v, a4, b4, c4, d, e, an, bn, cn)


def level_coefficients(s: SchemeDescriptor, k: int, n: int | None = None) -> TrigCoefficients | ExpCoefficients:
    """Raw (unnormalized) level-k coefficients; stationary schemes use the degenerate parameter."""
    if s.kind == "dual":
        h = s.param.h if isinstance(s.param, TrigParam) else 0.0
        return trig_coefficients(h, k, n)
    param = s.param if isinstance(s.param, ExpParam) else ExpParam(0.0)
    return exp_coefficients(param, k, n)


# ---------------------------------------------------------------- regular masks

_DS_MASK = np.array([[1, 3, 3, 1], [3, 9, 9, 3], [3, 9, 9, 3], [1, 3, 3, 1]]) / 16.0
_CC_MASK = np.array(
    [
        [1 / 64, 1 / 16, 3 / 32, 1 / 16, 1 / 64],
        [1 / 16, 1 / 4, 3 / 8, 1 / 4, 1 / 16],
        [3 / 32, 3 / 8, 9 / 16, 3 / 8, 3 / 32],
        [1 / 16, 1 / 4, 3 / 8, 1 / 4, 1 / 16],
        [1 / 64, 1 / 16, 3 / 32, 1 / 16, 1 / 64],
    ]
)
# (1 + z1)(1 - z2) placed on the centre of the 4x4 support; not divisible by (1 + z2).
_SKEW_PATTERN = np.zeros((4, 4))
_SKEW_PATTERN[1:3, 1:3] = [[1.0, -1.0], [1.0, -1.0]]


def _raw_regular_mask(s: SchemeDescriptor, k: int) -> np.ndarray:
    if s.name == "ds":
        return _DS_MASK.copy()
    if s.name == "cc":
        return _CC_MASK.copy()
    if s.name == "skew-ds":
        return _DS_MASK + s.param.eps * 4.0 ** (-k) * _SKEW_PATTERN
    if s.name == "trig-ds":
        t = trig_coefficients(s.param.h, k)
        corner, edge, centre = t.c4, t.b + t.c4, t.a + t.c4
        return np.array(
            [
                [corner, edge, edge, corner],
                [edge, centre, centre, edge],
                [edge, centre, centre, edge],
                [corner, edge, edge, corner],
            ]
        )
    x = exp_coefficients(s.param, k)
    q = 0.25
    return np.array(
        [
            [x.c4, x.e, x.b4, x.e, x.c4],
            [x.e, q, x.d, q, x.e],
            [x.b4, x.d, x.a4, x.d, x.b4],
            [x.e, q, x.d, q, x.e],
            [x.c4, x.e, x.b4, x.e, x.c4],
        ]
    )


def normalization_factor(s: SchemeDescriptor, k: int) -> float:
    """Reciprocal of the common coset sum of the raw level-k mask."""
    if k < 1:
        raise ValueError("level k must be >= 1")
    sums = Mask2D(_raw_regular_mask(s, k)).coset_sums()
    if sums.max() - sums.min() > COSET_TOL:
        raise NonConstantCosetSums(f"coset sums {sums.ravel().tolist()} differ by more than {COSET_TOL}")
    return 1.0 / float(sums.mean())


def _scale(s: SchemeDescriptor, k: int) -> float:
    return normalization_factor(s, k) if s.normalized else 1.0


def regular_mask(s: SchemeDescriptor, k: int) -> Mask2D:
    if k < 1:
        raise ValueError("level k must be >= 1")
    m = _raw_regular_mask(s, k)
    if s.normalized:
        m = m * normalization_factor(s, k)
    return Mask2D(m, (0, 0))


def regular_factor(s: SchemeDescriptor, k: int) -> np.ndarray:
    """Univariate mask ``u`` with ``regular_mask = outer(u, u)`` (tensor-product schemes only)."""
    if s.name == "skew-ds":
        raise ValueError("skew-ds masks are not tensor products")
    if s.kind == "dual":
        t = level_coefficients(s, k)
        c0 = math.cos(s.param.h / 2.0 ** (k - 1)) if isinstance(s.param, TrigParam) else 1.0
        c1 = math.cos(s.param.h / 2.0 ** k) if isinstance(s.param, TrigParam) else 1.0
        u0 = 1.0 / (4 * c1 * c0)
        u1 = (t.b + t.c4) / u0
        u = np.array([u0, u1, u1, u0])
    else:
        x = level_coefficients(s, k)
        w0 = 1.0 / (4 * (x.v + 1))
        u = np.array([w0, 0.5, (2 * x.v + 1) / (2 * (x.v + 1)), 0.5, w0])
    if s.normalized:
        u = u * math.sqrt(normalization_factor(s, k))
    return u


# ---------------------------------------------------------------- local blocks


@dataclass(frozen=True, eq=False)
class DualBlocks:
    """Blocks ``B_0 .. B_(n-1)`` (each p x p) around an extraordinary face."""

    n: int
    blocks: tuple[np.ndarray, ...]

    @property
    def p(self) -> int:
        return self.blocks[0].shape[0]


@dataclass(frozen=True, eq=False)
class PrimalBlocks:
    """Centre weight, centre-to-sector row, sector-to-centre column and p x p blocks."""

    n: int
    alpha: float
    beta: np.ndarray
    gamma: np.ndarray
    blocks: tuple[np.ndarray, ...]

    @property
    def p(self) -> int:
        return self.blocks[0].shape[0]


def _check_valence(n: int) -> None:
    if n < 3:
        raise UnsupportedValence(f"valence {n} < 3")


def _dual_blocks(n: int, a: float, b: float, c4: float, cn: float) -> list[np.ndarray]:
    z = np.zeros((4, 4))
    b0 = np.array(
        [
            [a + cn, 0, 0, 0],
            [a + c4, b + c4, 0, 0],
            [a + c4, b + c4, c4, b + c4],
            [a + c4, 0, 0, b + c4],
        ]
    )
    b1 = z.copy()
    b1[0, 0] = b + cn
    b1[3, 0:2] = [b + c4, c4]
    blast = z.copy()
    blast[0, 0] = b + cn
    blast[1, 0] = b + c4
    blast[1, 3] = c4
    mid = z.copy()
    mid[0, 0] = cn
    return [b0, b1] + [mid.copy() for _ in range(n - 3)] + [blast]


def _stationary_ds_blocks(n: int) -> list[np.ndarray]:
    z = np.zeros((4, 4))
    b0 = np.array(
        [
            [1 / (4 * n) + 1 / 2, 0, 0, 0],
            [9 / 16, 3 / 16, 0, 0],
            [9 / 16, 3 / 16, 1 / 16, 3 / 16],
            [9 / 16, 0, 0, 3 / 16],
        ]
    )
    b1 = z.copy()
    b1[0, 0] = 1 / (4 * n) + 1 / 8
    b1[3, 0:2] = [3 / 16, 1 / 16]
    blast = z.copy()
    blast[0, 0] = 1 / (4 * n) + 1 / 8
    blast[1, 0] = 3 / 16
    blast[1, 3] = 1 / 16
    mid = z.copy()
    mid[0, 0] = 1 / (4 * n)
    return [b0, b1] + [mid.copy() for _ in range(n - 3)] + [blast]


def _primal_blocks(n: int, a4, b4, c4, d, e) -> list[np.ndarray]:
    q = 0.25
    b0 = np.array(
        [
            [d, e, 0, 0, 0, 0],
            [q, q, 0, 0, 0, 0],
            [a4, b4, b4, c4, 0, 0],
            [d, d, e, e, 0, 0],
            [b4, a4, c4, b4, c4, b4],
            [e, d, 0, 0, 0, e],
        ]
    )
    b1 = np.zeros((6, 6))
    b1[:, 0] = [e, q, c4, e, b4, d]
    b1[4, 2] = c4
    b1[5, 2] = e
    blast = np.zeros((6, 6))
    blast[0, 0:2] = [e, e]
    blast[2, 0:2] = [c4, b4]
    blast[2, 5] = c4
    return [b0, b1] + [np.zeros((6, 6)) for _ in range(n - 3)] + [blast]


def local_blocks(s: SchemeDescriptor, k: int, n: int) -> DualBlocks | PrimalBlocks:
    """Level-k blocks around an extraordinary face (dual) or vertex (primal) of valence n."""
    _check_valence(n)
    if k < 1:
        raise ValueError("level k must be >= 1")
    f = _scale(s, k)
    if s.kind == "dual":
        if s.name in ("ds", "skew-ds"):
            raw = _stationary_ds_blocks(n)
        else:
            t = trig_coefficients(s.param.h, k, n)
            raw = _dual_blocks(n, t.a, t.b, t.c4, t.cn)
        return DualBlocks(n, tuple(_readonly(B * f) for B in raw))
    if s.name == "cc":
        alpha = 1 - 7 / (4 * n)
        beta = np.array([3 / (2 * n * n), 1 / (4 * n * n), 0, 0, 0, 0])
        gamma = np.array([3 / 8, 1 / 4, 3 / 32, 1 / 16, 1 / 64, 1 / 16])
        raw = _stationary_cc_blocks(n)
    else:
        x = exp_coefficients(s.param, k, n)
        alpha = x.an
        beta = np.array([x.bn, x.cn, 0, 0, 0, 0])
        gamma = np.array([x.d, 0.25, x.b4, x.e, x.c4, x.e])
        raw = _primal_blocks(n, x.a4, x.b4, x.c4, x.d, x.e)
    return PrimalBlocks(n, alpha * f, _readonly(beta * f), _readonly(gamma * f), tuple(_readonly(B * f) for B in raw))


def _stationary_cc_blocks(n: int) -> list[np.ndarray]:
    b0 = np.array(
        [
            [3 / 8, 1 / 16, 0, 0, 0, 0],
            [1 / 4, 1 / 4, 0, 0, 0, 0],
            [9 / 16, 3 / 32, 3 / 32, 1 / 64, 0, 0],
            [3 / 8, 3 / 8, 1 / 16, 1 / 16, 0, 0],
            [3 / 32, 9 / 16, 1 / 64, 3 / 32, 1 / 64, 3 / 32],
            [1 / 16, 3 / 8, 0, 0, 0, 1 / 16],
        ]
    )
    b1 = np.zeros((6, 6))
    b1[:, 0] = [1 / 16, 1 / 4, 1 / 64, 1 / 16, 3 / 32, 3 / 8]
    b1[4, 2] = 1 / 64
    b1[5, 2] = 1 / 16
    blast = np.zeros((6, 6))
    blast[0, 0:2] = [1 / 16, 1 / 16]
    blast[2, 0:2] = [1 / 64, 3 / 32]
    blast[2, 5] = 1 / 64
    return [b0, b1] + [np.zeros((6, 6)) for _ in range(n - 3)] + [blast]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------- mesh rules


def dual_face_weights(s: SchemeDescriptor, k: int, n: int) -> np.ndarray:
    """Weights ``w[d]`` of corner ``i + d`` for the new point at corner ``i`` of an n-gon."""
    _check_valence(n)
    if s.name == "skew-ds":
        raise ValueError("skew-ds has no mesh refinement rule")
    t = level_coefficients(s, k, n)
    w = np.full(n, t.cn)
    w[0] += t.a
    w[1] += t.b
    w[n - 1] += t.b
    return w * _scale(s, k)


@dataclass(frozen=True)
class PrimalRules:
    vertex_centre: float
    vertex_edge: float
    vertex_face: float
    edge_end: float
    edge_side: float
    face: float


def primal_rules(s: SchemeDescriptor, k: int, n: int) -> PrimalRules:
    """Vertex rule for valence n, plus the edge rule and face rule of level k."""
    _check_valence(n)
    f = _scale(s, k)
    if s.name == "cc":
        return PrimalRules((1 - 7 / (4 * n)) * f, 3 / (2 * n * n) * f, 1 / (4 * n * n) * f, 3 / 8 * f, 1 / 16 * f, 0.25 * f)
    x = exp_coefficients(s.param, k, n)
    return PrimalRules(x.an * f, x.bn * f, x.cn * f, x.d * f, x.e * f, 0.25 * f)
