import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nssubdiv.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, RunConfig, main, parse_valences
from nssubdiv.mesh import load_obj, refine, save_obj, validate_manifold
from nssubdiv.schemes import parse_scheme
from nssubdiv.shapes import cube, prism, spindle, torus


def write(tmp_path, name, mesh):
    p = tmp_path / name
    p.write_text(save_obj(mesh))
    return str(p)


def test_parse_valences():
    assert parse_valences("5..10") == [5, 6, 7, 8, 9, 10]
    assert parse_valences("3,5..6") == [3, 5, 6]


@given(
    st.sampled_from(["refine", "analyze", "limit"]),
    st.sampled_from(["ds", "cc", "trig-ds:h=1", "exp-cc:theta=10i"]),
    st.sampled_from([None, True, False]),
    st.lists(st.integers(3, 12), min_size=1, max_size=4),
    st.integers(4, 8),
)
def test_run_config_json_roundtrip(command, scheme, normalized, valences, grid_log):
    cfg = RunConfig(command, scheme, normalized, valences, grid=2 ** grid_log, export_rings=True)
    assert RunConfig.from_json(cfg.to_json()) == cfg


def test_default_normalization():
    assert RunConfig("refine", "trig-ds:h=1").descriptor().normalized
    assert not RunConfig("analyze", "trig-ds:h=1").descriptor().normalized
    assert not RunConfig("refine", "trig-ds:h=1", normalized=False).descriptor().normalized
    assert RunConfig("analyze", "exp-cc:theta=3").stationary_descriptor().name == "cc"


def test_refine_writes_levels(tmp_path):
    src = write(tmp_path, "cube.obj", cube())
    out = tmp_path / "out"
    assert main(["refine", src, "--scheme", "trig-ds:h=1", "--levels", "3", "--out", str(out)]) == EXIT_OK
    for k in (1, 2, 3):
        m = load_obj((out / f"mesh_{k}.obj").read_text())
        assert validate_manifold(m).ok and m.is_closed
    # normalized trig-DS keeps the refined cube inside its convex hull
    assert np.abs(m.vertices).max() <= 0.5 + 1e-12


def test_refine_theta_zero_equals_catmull_clark(tmp_path):
    src = write(tmp_path, "torus.obj", torus(6, 6))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["refine", src, "--scheme", "exp-cc:theta=0", "--levels", "2", "--out", str(a)]) == EXIT_OK
    assert main(["refine", src, "--scheme", "cc", "--levels", "2", "--out", str(b)]) == EXIT_OK
    assert (a / "mesh_2.obj").read_bytes() == (b / "mesh_2.obj").read_bytes()


def test_execution_errors_exit_one(tmp_path, capsys):
    assert main(["refine", str(tmp_path / "missing.obj"), "--scheme", "cc", "--out", str(tmp_path)]) == EXIT_ERROR
    src = write(tmp_path, "prism.obj", prism(5))
    assert main(["refine", src, "--scheme", "cc", "--out", str(tmp_path)]) == EXIT_ERROR  # pentagon caps
    assert main(["refine", src, "--scheme", "trig-ds:h=2", "--out", str(tmp_path)]) == EXIT_ERROR
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 3\nf 1 2 4\nf 1 2 3\n")
    assert main(["refine", str(bad), "--scheme", "ds", "--out", str(tmp_path)]) == EXIT_ERROR
    with pytest.raises(SystemExit) as exc:
        main(["analyze"])
    assert exc.value.code == EXIT_ERROR
    assert "error" in capsys.readouterr().err


def test_analyze_pass_writes_outputs_deterministically(tmp_path):
    out = tmp_path / "run"
    args = ["analyze", "--scheme", "trig-ds:h=1", "--valences", "5..6", "--levels", "4", "--depth", "4",
            "--grid", "32", "--out", str(out)]
    assert main(args) == EXIT_OK
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert {"report.json", "decay.csv", "equivalence_order0.csv", "equivalence_order1.csv", "angles.csv",
            "decay.png", "equivalence.png", "angles.png"} <= set(first)
    rep = json.loads(first["report.json"])
    assert rep["verdict"] == "pass" and len(rep["reports"]) == 4
    assert main(args) == EXIT_OK
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first == second


def test_analyze_csv_and_ring_export(tmp_path):
    out = tmp_path / "csv"
    assert main(["analyze", "--scheme", "exp-cc:theta=3", "--valences", "5", "--levels", "2", "--depth", "3",
                 "--grid", "16", "--format", "csv", "--export-rings", "--out", str(out)]) == EXIT_OK
    rows = (out / "report.csv").read_text().splitlines()
    assert rows[0] == "valence,check,entry,status" and all(r.endswith("pass") for r in rows[1:])
    grids = sorted(out.glob("ring_n5_k*_cell*.obj"))
    assert len(grids) == 2 * 5 * 3
    assert load_obj(grids[0].read_text()).n_faces == 8 * 8


def test_analyze_failing_hypothesis_exits_two(tmp_path, capsys):
    out = tmp_path / "skew"
    assert main(["analyze", "--scheme", "skew-ds:eps=1", "--valences", "5", "--out", str(out)]) == EXIT_FAIL
    assert "smoothing-factor: fail" in capsys.readouterr().out
    rep = json.loads((out / "report.json").read_text())
    assert rep["verdict"] == "fail"


def test_analyze_singular_valence_is_an_error(tmp_path):
    assert main(["analyze", "--scheme", "cc", "--valences", "3", "--out", str(tmp_path / "x")]) == EXIT_ERROR


def test_analyze_incompatible_stationary(tmp_path):
    assert main(["analyze", "--scheme", "trig-ds:h=1", "--stationary", "cc", "--out", str(tmp_path / "x")]) == EXIT_ERROR


def _collared(kind, n, amplitude=0.0):
    m = prism(n) if kind == "dual" else spindle(n)
    for _ in range(2):
        m = refine(m, parse_scheme("ds" if kind == "dual" else "cc"), 1)
    if amplitude:
        m = m.with_vertices(m.vertices + amplitude * np.random.default_rng(3).standard_normal(m.vertices.shape))
    return m


def _ngon_face(m, n):
    return next(i for i, f in enumerate(m.faces) if len(f) == n)


@pytest.mark.parametrize("scheme,kind", [("trig-ds:h=1", "dual"), ("exp-cc:theta=3", "primal")])
def test_limit_symmetric_data_has_axial_normal(tmp_path, scheme, kind):
    m = _collared(kind, 5)
    element = _ngon_face(m, 5) if kind == "dual" else next(
        v for v in range(m.n_vertices) if m.valence(v) == 5 and m.vertices[v, 2] > 0)
    src = write(tmp_path, "m.obj", m)
    out = tmp_path / "lim"
    assert main(["limit", src, "--scheme", scheme, "--element", str(element), "--levels", "5", "--depth", "4",
                 "--out", str(out)]) == EXIT_OK
    d = json.loads((out / "limit.json").read_text())
    n_inf = np.array(d["n_inf"])
    assert abs(abs(n_inf[2]) - 1) < 1e-6
    assert np.hypot(*d["r_c"][:2]) < 1e-9


def test_limit_point_scales_with_data(tmp_path):
    m = _collared("dual", 6, amplitude=0.05)
    f = _ngon_face(m, 6)
    a = tmp_path / "a.obj"
    b = tmp_path / "b.obj"
    a.write_text(save_obj(m))
    b.write_text(save_obj(m.with_vertices(2.0 * m.vertices)))
    for src, out in ((a, "oa"), (b, "ob")):
        assert main(["limit", str(src), "--scheme", "trig-ds:h=1/16", "--element", str(f), "--levels", "3",
                     "--depth", "3", "--out", str(tmp_path / out)]) == EXIT_OK
    ra = np.array(json.loads((tmp_path / "oa" / "limit.json").read_text())["r_c"])
    rb = np.array(json.loads((tmp_path / "ob" / "limit.json").read_text())["r_c"])
    assert np.allclose(rb, 2 * ra, atol=1e-12)


def test_limit_without_collar_is_an_error(tmp_path):
    src = write(tmp_path, "p.obj", prism(5))
    assert main(["limit", src, "--scheme", "ds", "--out", str(tmp_path / "x")]) == EXIT_ERROR
