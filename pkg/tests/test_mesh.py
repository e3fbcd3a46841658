import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nssubdiv.errors import BoundaryUnsupported, InconsistentOrientation, InsufficientRegularCollar, NonManifold, NonQuadFace
from nssubdiv.localmatrix import assemble
from nssubdiv.mesh import (
    QuadMesh,
    classify_elements,
    euler_characteristic,
    extract_local_neighborhood,
    load_obj,
    refine,
    refine_with_map,
    save_obj,
    save_point_grid_obj,
    sector_start_after_refinement,
    validate_manifold,
)
from nssubdiv.schemes import parse_scheme
from nssubdiv.shapes import cube, prism, spindle, torus

DUAL = ["ds", "trig-ds:h=1/16", "trig-ds:h=1"]
PRIMAL = ["cc", "exp-cc:theta=3", "exp-cc:theta=10i"]


def test_obj_roundtrip():
    m = spindle(5)
    back = load_obj(save_obj(m))
    assert np.array_equal(back.vertices, m.vertices) and back.faces == m.faces
    assert load_obj(io.BytesIO(save_obj(m).encode())).faces == m.faces


def test_obj_parse_details():
    text = "# cube\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n"
    m = load_obj(text)
    assert m.faces == ((0, 1, 2, 3),)
    m2 = load_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nf -3 -2 -1\n")
    assert m2.faces == ((0, 1, 2),)
    with pytest.raises(ValueError):
        load_obj("v 0 0\n")
    with pytest.raises(ValueError):
        load_obj("v 0 0 0\nf 1 2 3\n")


def test_orientation_is_repaired():
    c = cube()
    faces = [list(f) for f in c.faces]
    faces[2] = faces[2][::-1]
    text = "".join(f"v {x} {y} {z}\n" for x, y, z in c.vertices) + "".join(
        "f " + " ".join(str(i + 1) for i in f) + "\n" for f in faces
    )
    m = load_obj(text)
    assert validate_manifold(m).ok and m.is_closed
    raw = QuadMesh(c.vertices, faces)
    assert "InconsistentOrientation" in validate_manifold(raw).kinds()
    with pytest.raises(InconsistentOrientation):
        load_obj(text, orient=False)


def test_validation_reports():
    v = np.zeros((6, 3))
    assert "DegenerateFace" in validate_manifold(QuadMesh(v, [[0, 1, 1, 2]])).kinds()
    assert "MissingVertex" in validate_manifold(QuadMesh(v, [[0, 1, 9]])).kinds()
    fan = QuadMesh(v, [[0, 1, 2], [0, 3, 1], [1, 0, 4]])
    assert "NonManifoldEdge" in validate_manifold(fan).kinds()
    with pytest.raises(NonManifold):
        fan.halfedges  # noqa: B018
    bowtie = QuadMesh(np.zeros((5, 3)), [[0, 1, 2], [0, 3, 4]])
    assert "NonManifoldVertex" in validate_manifold(bowtie).kinds()
    assert validate_manifold(cube()).ok


def test_open_mesh_is_rejected():
    sheet = QuadMesh(np.zeros((4, 3)), [[0, 1, 2, 3]])
    with pytest.raises(BoundaryUnsupported):
        refine(sheet, parse_scheme("cc"))
    with pytest.raises(NonQuadFace):
        refine(prism(5), parse_scheme("cc"))


def test_classification():
    cl = classify_elements(spindle(6))
    assert sorted(int(cl.vertex_valence[v]) for v in cl.extraordinary_vertices) == [3] * 12 + [6, 6]
    assert not cl.extraordinary_faces
    p = classify_elements(prism(5))
    assert len(p.extraordinary_faces) == 2 and p.extraordinary_vertices == [v for v in range(10)]
    assert classify_elements(torus()).is_regular


@pytest.mark.parametrize("name", DUAL + PRIMAL)
def test_refinement_preserves_topology(name):
    s = parse_scheme(name)
    m = cube() if s.kind == "dual" else spindle(5)
    chi = euler_characteristic(m)
    for k in range(1, 4):
        nf, ne, nv = m.n_faces, m.n_edges, m.n_vertices
        m = refine(m, s, k)
        assert validate_manifold(m).ok and m.is_closed
        assert euler_characteristic(m) == chi
        if s.kind == "primal":
            assert m.n_vertices == nv + ne + nf and m.n_faces == 4 * nf
        else:
            assert m.n_faces == nf + ne + nv


@pytest.mark.parametrize("name", DUAL + PRIMAL)
@pytest.mark.parametrize("n", [3, 5, 6])
@pytest.mark.parametrize("k", [1, 4])
def test_local_matrix_matches_mesh_refinement(name, n, k):
    """Refining the mesh and then extracting equals extracting and applying the local matrix."""
    s = parse_scheme(name)
    base = prism(n) if s.kind == "dual" else spindle(n)
    # dual patches need two steps before the n-gon's collar is all quads
    for _ in range(2 if s.kind == "dual" else 1):
        base = refine(base, parse_scheme("ds" if s.kind == "dual" else "cc"), 1)
    rng = np.random.default_rng(n * 10 + k)
    m = base.with_vertices(base.vertices + 0.1 * rng.standard_normal(base.vertices.shape))
    cl = classify_elements(m)
    if s.kind == "dual":
        element = next(f for f in cl.extraordinary_faces if len(m.faces[f]) == n)
        start = m.faces[element][0]
    else:
        element = next(v for v in cl.extraordinary_vertices if m.valence(v) == n)
        start = m.halfedges.dest(m.outgoing(element)[0])
    patch = extract_local_neighborhood(m, element, s.kind, start)
    ref = refine_with_map(m, s, k)
    e2, st2 = sector_start_after_refinement(ref, s.kind, element, start)
    fine = extract_local_neighborhood(ref.mesh, e2, s.kind, st2)
    S = assemble(s, k, n)
    assert np.max(np.abs(S.dense @ patch.d - fine.d)) < 1e-13


def test_collar_required():
    with pytest.raises(InsufficientRegularCollar):
        extract_local_neighborhood(spindle(5), 2 * 11 - 1, "primal")


@given(st.sampled_from(DUAL + PRIMAL), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_refinement_is_affine_invariant(name, k, seed):
    s = parse_scheme(name, normalized=True)
    m = spindle(5)
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    t = rng.standard_normal(3)
    a = refine(m.with_vertices(m.vertices @ A.T + t), s, k).vertices
    b = refine(m, s, k).vertices @ A.T + t
    assert np.allclose(a, b, atol=1e-12 * max(1.0, np.abs(b).max()))


def test_exp_cc_at_zero_is_bitwise_catmull_clark():
    m = torus(6, 8)
    a, b = m, m
    for k in range(1, 4):
        a = refine(a, parse_scheme("exp-cc:theta=0"), k)
        b = refine(b, parse_scheme("cc"), k)
    assert save_obj(a) == save_obj(b)


def test_point_grid_obj():
    g = np.zeros((3, 3, 3))
    g[..., 0], g[..., 1] = np.meshgrid(np.arange(3), np.arange(3), indexing="ij")
    m = load_obj(save_point_grid_obj(g))
    assert m.n_vertices == 9 and m.n_faces == 4
