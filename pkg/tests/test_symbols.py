import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nssubdiv.errors import ComplexCoefficients, NotDivisible
from nssubdiv.schemes import parse_scheme, regular_mask
from nssubdiv.symbols import (
    EquivalenceEstimate,
    LaurentSymbol,
    Mask2D,
    asymptotic_equivalence,
    divided_difference_symbol,
    fit_geometric_ratio,
    has_smoothing_factor,
    mask_distance,
    multiply_by_one_plus,
    operator_norm,
    subdivide,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def small_masks(max_side=5):
    return st.integers(1, max_side).flatmap(
        lambda r: st.integers(1, max_side).flatmap(lambda c: arrays(float, (r, c), elements=finite))
    )


# ---------------------------------------------------------------- oracles


def trig_ds_symbol_oracle(h, k):
    """Level-k trig-DS symbol as the published product of complex linear factors."""
    w = np.exp(1j * h / 2 ** (k - 1))
    num = LaurentSymbol.monomial_factor([1, 1], 0) * LaurentSymbol.monomial_factor([1, 1], 1)
    num = num * LaurentSymbol.monomial_factor([w, 1], 0) * LaurentSymbol.monomial_factor([1, w], 0)
    num = num * LaurentSymbol.monomial_factor([w, 1], 1) * LaurentSymbol.monomial_factor([1, w], 1)
    scale = w / ((np.exp(1j * h / 2 ** (k - 2)) + 1) ** 2 * (w + 1) ** 2)
    return num * scale


def exp_cc_symbol_oracle(theta, k):
    w = np.exp(1j * theta / 2 ** k)
    s = LaurentSymbol.monomial_factor([1, 2, 1], 0) * LaurentSymbol.monomial_factor([1, 2, 1], 1)
    s = s * LaurentSymbol.monomial_factor([1, w], 0) * LaurentSymbol.monomial_factor([w, 1], 0)
    s = s * LaurentSymbol.monomial_factor([1, w], 1) * LaurentSymbol.monomial_factor([w, 1], 1)
    return s * (1 / (4 * (w + 1) ** 4))


@pytest.mark.parametrize("h", [0.0, 1 / 16, 0.5, 1.0])
@pytest.mark.parametrize("k", [1, 2, 5, 12])
def test_trig_ds_mask_matches_factored_symbol(h, k):
    oracle = trig_ds_symbol_oracle(h, k).to_mask()
    mask = regular_mask(parse_scheme(f"trig-ds:h={h}"), k)
    assert np.allclose(oracle.coeffs, mask.coeffs, rtol=0, atol=1e-13)


@pytest.mark.parametrize("theta", [0.0, 1.0, 3.0, 10j, 2j])
@pytest.mark.parametrize("k", [1, 2, 5, 12])
def test_exp_cc_mask_matches_factored_symbol(theta, k):
    # an imaginary theta makes w = exp(i theta / 2^k) real
    oracle = exp_cc_symbol_oracle(theta, k).to_mask()
    text = f"{abs(theta):g}i" if isinstance(theta, complex) else f"{theta:g}"
    mask = regular_mask(parse_scheme(f"exp-cc:theta={text}"), k)
    assert np.allclose(oracle.coeffs, mask.coeffs, rtol=0, atol=1e-13)


def test_stationary_symbols_are_binomial_products():
    ds = np.outer([1, 3, 3, 1], [1, 3, 3, 1]) / 16
    cc = np.outer([1, 4, 6, 4, 1], [1, 4, 6, 4, 1]) / 64
    assert np.array_equal(regular_mask(parse_scheme("ds"), 1).coeffs, ds)
    assert np.array_equal(regular_mask(parse_scheme("cc"), 1).coeffs, cc)


# ---------------------------------------------------------------- Mask2D


def test_mask_is_read_only():
    m = Mask2D(np.ones((2, 2)))
    with pytest.raises(ValueError):
        m.coeffs[0, 0] = 5.0


def test_mask_offsets_align_in_arithmetic():
    a = Mask2D(np.array([[1.0]]), (0, 0))
    b = Mask2D(np.array([[2.0]]), (1, 1))
    d = b - a
    assert d.offset == (0, 0)
    assert np.array_equal(d.coeffs, [[-1.0, 0.0], [0.0, 2.0]])


def test_coset_sums_account_for_offset():
    m = Mask2D(np.array([[1.0, 2.0]]), (0, 1))
    sums = m.coset_sums()
    # coefficient 1 sits at alpha=(0,1), coefficient 2 at (0,2)
    assert sums[0, 1] == 1.0 and sums[0, 0] == 2.0


@given(small_masks(), st.integers(-3, 3), st.integers(-3, 3))
def test_mask_json_round_trip(coeffs, o1, o2):
    m = Mask2D(coeffs, (o1, o2))
    back = Mask2D.from_json(m.to_json())
    assert back.offset == m.offset and np.array_equal(back.coeffs, m.coeffs)
    json.loads(m.to_json())


@given(small_masks())
def test_operator_norm_is_max_coset_sum_of_moduli(coeffs):
    m = Mask2D(coeffs)
    manual = max(np.abs(coeffs[i::2, j::2]).sum() for i in range(2) for j in range(2) if coeffs[i::2, j::2].size)
    assert math.isclose(operator_norm(m), manual, rel_tol=1e-12, abs_tol=1e-12)


def test_mask_distance_symmetric():
    a, b = regular_mask(parse_scheme("ds"), 1), regular_mask(parse_scheme("trig-ds:h=1"), 3)
    assert mask_distance(a, b) == mask_distance(b, a) > 0


# ---------------------------------------------------------------- divided differences


@given(small_masks(4), st.sampled_from([1, 2]))
def test_divided_difference_round_trip(coeffs, j):
    c = multiply_by_one_plus(LaurentSymbol(coeffs.astype(complex)), j)
    b = divided_difference_symbol(c, j)
    back = multiply_by_one_plus(b, j)
    assert np.allclose(back.coeffs, c.coeffs, atol=1e-12)


def test_divided_difference_of_ds():
    c = LaurentSymbol.from_mask(regular_mask(parse_scheme("ds"), 1))
    b = divided_difference_symbol(c, 1)
    expected = 2 * np.outer([1, 2, 1], [1, 3, 3, 1]) / 16
    assert np.allclose(b.coeffs.real, expected, atol=1e-15)


def test_non_divisible_raises():
    c = LaurentSymbol(np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex))
    with pytest.raises(NotDivisible):
        divided_difference_symbol(c, 1)
    assert not has_smoothing_factor(c)


def test_skew_counterexample_lacks_second_factor():
    c = LaurentSymbol.from_mask(regular_mask(parse_scheme("skew-ds:eps=1"), 1))
    divided_difference_symbol(c, 1)
    with pytest.raises(NotDivisible):
        divided_difference_symbol(c, 2)


def test_complex_coefficients_rejected():
    with pytest.raises(ComplexCoefficients):
        LaurentSymbol(np.array([[1 + 1e-6j]])).to_mask()


# ---------------------------------------------------------------- subdivide


@given(arrays(float, (3, 3), elements=finite), arrays(float, (3, 3), elements=finite), finite)
def test_subdivide_is_linear(f, g, a):
    m = regular_mask(parse_scheme("cc"), 1)
    lhs, o1 = subdivide(a * f + g, (0, 0), m)
    r1, _ = subdivide(f, (0, 0), m)
    r2, o2 = subdivide(g, (0, 0), m)
    assert o1 == o2
    assert np.allclose(lhs, a * r1 + r2, atol=1e-9)


def test_subdivide_matches_direct_rule():
    rng = np.random.default_rng(3)
    f = rng.standard_normal((4, 5))
    m = regular_mask(parse_scheme("trig-ds:h=1"), 2)
    out, origin = subdivide(f, (2, -1), m)
    c = m.coeffs
    for _ in range(20):
        a = (int(rng.integers(origin[0], origin[0] + out.shape[0])), int(rng.integers(origin[1], origin[1] + out.shape[1])))
        direct = 0.0
        for b0 in range(2, 6):
            for b1 in range(-1, 4):
                i, j = a[0] - 2 * b0 - m.offset[0], a[1] - 2 * b1 - m.offset[1]
                if 0 <= i < c.shape[0] and 0 <= j < c.shape[1]:
                    direct += c[i, j] * f[b0 - 2, b1 + 1]
        assert math.isclose(out[a[0] - origin[0], a[1] - origin[1]], direct, abs_tol=1e-13)


# ---------------------------------------------------------------- asymptotic equivalence


def test_geometric_ratio_recovered():
    assert math.isclose(fit_geometric_ratio([3 * 0.5 ** k for k in range(12)]), 0.5, rel_tol=1e-12)
    assert fit_geometric_ratio([0.0, 0.0, 1e-3]) == 0.0


def test_equivalence_of_identical_masks_is_trivially_converged():
    ds = regular_mask(parse_scheme("ds"), 1)
    est = asymptotic_equivalence(1, lambda k: ds, ds)
    assert est.verdict == "converged" and est.partial_sums[-1] == 0.0


def test_equivalence_detects_divergence():
    ds = regular_mask(parse_scheme("ds"), 1)
    est = asymptotic_equivalence(1, lambda k: ds.scaled(1 + 2.0 ** -k), ds, k_max=20)
    # 2^k * 2^-k = const: the order-1 series diverges
    assert est.verdict == "diverging"


@pytest.mark.parametrize("name", ["trig-ds:h=1", "exp-cc:theta=3"])
def test_order_one_terms_decay_like_half_power(name):
    s = parse_scheme(name)
    ref = regular_mask(s.stationary_counterpart(), 1)
    est = asymptotic_equivalence(1, lambda k: regular_mask(s, k), ref, k_max=20)
    assert est.verdict in ("converged", "inconclusive")
    assert math.isclose(est.tail_ratio, 0.5, rel_tol=0.02)


def test_equivalence_csv_and_json():
    ds = regular_mask(parse_scheme("ds"), 1)
    est = asymptotic_equivalence(0, lambda k: regular_mask(parse_scheme("trig-ds:h=1"), k), ds, k_max=10)
    lines = est.to_csv().splitlines()
    assert lines[0] == "k,term,partial_sum" and len(lines) == 11
    assert isinstance(est, EquivalenceEstimate)
    assert json.loads(est.to_json())["order"] == 0
