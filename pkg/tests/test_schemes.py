import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nssubdiv.errors import InvalidParameter, UnsupportedValence
from nssubdiv.schemes import (
    ExpParam,
    SchemeDescriptor,
    TrigParam,
    dual_face_weights,
    exp_coefficients,
    local_blocks,
    normalization_factor,
    parse_scheme,
    primal_rules,
    regular_factor,
    regular_mask,
    trig_coefficients,
    vk,
)

ALL = ["ds", "cc", "trig-ds:h=1/16", "trig-ds:h=1", "exp-cc:theta=3", "exp-cc:theta=10i"]


def test_parse_ids():
    s = parse_scheme("trig-ds:h=1/16")
    assert s.param == TrigParam(1 / 16) and s.kind == "dual" and s.block_size == 4
    t = parse_scheme("exp-cc:theta=10i")
    assert t.param == ExpParam(10.0, True) and t.kind == "primal" and t.block_size == 7
    assert t.id == "exp-cc:theta=10i"
    assert parse_scheme("cc").is_stationary
    assert parse_scheme("exp-cc:theta=0").is_stationary
    assert not parse_scheme("trig-ds:h=1").is_stationary


@pytest.mark.parametrize("text", ["trig-ds:h=1.1", "trig-ds:h=-0.1", "exp-cc:theta=3.2", "exp-cc:theta=20i",
                                  "exp-cc:theta=0i", "loop", "ds:h=1", "trig-ds:theta=1", "trig-ds:h=abc"])
def test_parse_rejects(text):
    with pytest.raises(InvalidParameter):
        parse_scheme(text)


def test_imaginary_bound_is_twice_acosh_500():
    parse_scheme(f"exp-cc:theta={2 * math.acosh(500) - 1e-9}i")
    v1 = vk(ExpParam(2 * math.acosh(500) - 1e-9, True), 1)
    assert 499 < v1 < 500


@pytest.mark.parametrize("theta", [ExpParam(3.0), ExpParam(10.0, True), ExpParam(0.5)])
def test_vk_half_angle_recurrence(theta):
    for k in range(1, 15):
        assert math.isclose(vk(theta, k + 1), math.sqrt((vk(theta, k) + 1) / 2), rel_tol=1e-14)


@pytest.mark.parametrize("name", ALL)
@pytest.mark.parametrize("k", [1, 2, 3, 8])
def test_mask_is_tensor_product_of_factor(name, k):
    s = parse_scheme(name)
    u = regular_factor(s, k)
    assert np.allclose(np.outer(u, u), regular_mask(s, k).coeffs, rtol=0, atol=1e-15)


@pytest.mark.parametrize("name", ["ds", "cc", "exp-cc:theta=3", "exp-cc:theta=10i", "exp-cc:theta=0.3"])
def test_affine_masks_have_unit_coset_sums(name):
    for k in range(1, 10):
        assert np.allclose(regular_mask(parse_scheme(name), k).coset_sums(), 1.0, atol=1e-14)


def test_trig_ds_coset_sums_constant_but_not_one():
    s = parse_scheme("trig-ds:h=1")
    sums = regular_mask(s, 1).coset_sums()
    assert np.ptp(sums) < 1e-14 and abs(sums[0, 0] - 1) > 0.5
    t = trig_coefficients(1.0, 1)
    assert math.isclose(sums[0, 0], t.a + 2 * t.b + 4 * t.c4, rel_tol=1e-14)
    ns = parse_scheme("trig-ds:h=1", normalized=True)
    assert np.allclose(regular_mask(ns, 1).coset_sums(), 1.0, atol=1e-14)
    assert math.isclose(normalization_factor(s, 1), 1 / sums[0, 0])


# Taylor oracles: with x = h 2^-k, cos x = 1 - x^2/2 + O(x^4), so 4^k (coef_k - coef) tends to
# the first-order coefficient below. These limits are derived by hand from the coefficient formulas.
@pytest.mark.parametrize("h", [1 / 16, 0.5, 1.0])
def test_trig_coefficients_approach_stationary_at_rate_four(h):
    k = 12
    t = trig_coefficients(h, k, 6)
    q = 4.0 ** k
    assert math.isclose(q * (t.a - 0.5), h * h, rel_tol=1e-6)
    assert math.isclose(q * (t.b - 1 / 8), 3 * h * h / 8, rel_tol=1e-6)
    assert math.isclose(q * (t.c4 - 1 / 16), 5 * h * h / 16, rel_tol=1e-6)


@pytest.mark.parametrize("theta,sign", [(ExpParam(3.0), 1.0), (ExpParam(1.0), 1.0), (ExpParam(10.0, True), -1.0)])
def test_exp_coefficients_approach_stationary_at_rate_four(theta, sign):
    k = 14
    x = exp_coefficients(theta, k, 7)
    q = 4.0 ** k
    t2 = sign * theta.magnitude ** 2  # v_k - 1 ~ -t2 / (2 * 4^k)
    assert math.isclose(q * (x.a4 - 9 / 16), -3 * t2 / 32, rel_tol=1e-5)
    assert math.isclose(q * (x.b4 - 3 / 32), t2 / 64, rel_tol=1e-5)
    assert math.isclose(q * (x.c4 - 1 / 64), t2 / 128, rel_tol=1e-5)
    assert math.isclose(q * (x.d - 3 / 8), -t2 / 32, rel_tol=1e-5)
    assert math.isclose(q * (x.e - 1 / 16), t2 / 64, rel_tol=1e-5)


@pytest.mark.parametrize("n", range(5, 11))
def test_stationary_reduction_exact(n):
    ds, cc = parse_scheme("ds"), parse_scheme("cc")
    tds, ecc = parse_scheme("trig-ds:h=0"), parse_scheme("exp-cc:theta=0")
    for k in range(1, 21):
        assert np.max(np.abs(regular_mask(tds, k).coeffs - regular_mask(ds, 1).coeffs)) <= 1e-15
        assert np.max(np.abs(regular_mask(ecc, k).coeffs - regular_mask(cc, 1).coeffs)) <= 1e-15
        for a, b in zip(local_blocks(tds, k, n).blocks, local_blocks(ds, k, n).blocks):
            assert np.max(np.abs(a - b)) <= 1e-15
        p, q = local_blocks(ecc, k, n), local_blocks(cc, k, n)
        assert abs(p.alpha - q.alpha) <= 1e-15
        assert np.max(np.abs(p.beta - q.beta)) <= 1e-15 and np.max(np.abs(p.gamma - q.gamma)) <= 1e-15
        for a, b in zip(p.blocks, q.blocks):
            assert np.max(np.abs(a - b)) <= 1e-15


def test_published_stationary_weights():
    # classical Doo-Sabin / Catmull-Clark vertex weights at n = 5
    w = dual_face_weights(parse_scheme("ds"), 1, 5)
    assert np.allclose(w, [0.5 + 0.05, 0.125 + 0.05, 0.05, 0.05, 0.125 + 0.05])
    r = primal_rules(parse_scheme("cc"), 1, 5)
    assert math.isclose(r.vertex_centre, 1 - 7 / 20) and math.isclose(r.vertex_edge, 3 / 50)
    assert math.isclose(r.vertex_face, 1 / 100) and (r.edge_end, r.edge_side, r.face) == (3 / 8, 1 / 16, 1 / 4)


@given(st.sampled_from(ALL), st.integers(1, 30), st.integers(3, 12))
def test_extraordinary_rules_are_affine_for_affine_schemes(name, k, n):
    s = parse_scheme(name, normalized=True)
    if s.kind == "dual":
        assert math.isclose(dual_face_weights(s, k, n).sum(), 1.0, rel_tol=1e-13)
    else:
        r = primal_rules(s, k, n)
        assert math.isclose(r.vertex_centre + n * (r.vertex_edge + r.vertex_face), 1.0, rel_tol=1e-13)
        assert math.isclose(2 * r.edge_end + 4 * r.edge_side, 1.0, rel_tol=1e-13)


@given(st.sampled_from(ALL), st.integers(1, 20), st.integers(3, 12))
def test_block_rows_sum_like_mesh_rules(name, k, n):
    # every new point is an affine combination for affine schemes, so dense rows sum to 1
    from nssubdiv.localmatrix import assemble

    s = parse_scheme(name, normalized=True)
    S = assemble(s, k, n).dense
    assert np.allclose(S.sum(axis=1), 1.0, atol=1e-13)


def test_unsupported_valence():
    with pytest.raises(UnsupportedValence):
        local_blocks(parse_scheme("ds"), 1, 2)


def test_descriptor_validation():
    with pytest.raises(InvalidParameter):
        SchemeDescriptor("trig-ds", ExpParam(1.0))
    with pytest.raises(InvalidParameter):
        SchemeDescriptor("ds", TrigParam(0.1))
    assert str(parse_scheme("trig-ds:h=1", True)) == "trig-ds:h=1 (normalized)"
