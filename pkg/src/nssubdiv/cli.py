"""Command-line front end: ``nssubdiv refine | analyze | limit``.

Exit codes: 0 on success (and every analysis passing), 2 when some analysis
verdict is "fail", 1 on any execution or usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import analyzer as an
from . import localmatrix as lm
from . import plotting, shapes
from .errors import SubdivisionError
from .mesh import (
    classify_elements,
    extract_local_neighborhood,
    load_obj,
    refine,
    save_obj,
    save_point_grid_obj,
    validate_manifold,
)
from .schemes import SchemeDescriptor, parse_scheme, regular_mask
from .symbols import DIVISION_TOL, asymptotic_equivalence

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    scheme: str
    normalized: bool | None = None  # None: command default
    valences: list[int] = field(default_factory=lambda: list(range(5, 11)))
    levels: int | None = None
    ktop: int = 15
    grid: int = 64
    depth: int = 6
    tol_eigen: float = 1e-8
    noise_floor: float = lm.NOISE_FLOOR
    division_tol: float = DIVISION_TOL
    input: str | None = None
    element: int | None = None
    stationary: str | None = None
    out: str = "nssubdiv-out"
    format: str = "json"
    export_rings: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))

    def descriptor(self) -> SchemeDescriptor:
        normalized = self.normalized
        if normalized is None:
            # refinement output is shown as geometry, so trig-DS is normalized there by default
            normalized = self.command == "refine" and self.scheme.startswith("trig-ds")
        return parse_scheme(self.scheme, normalized)

    def stationary_descriptor(self) -> SchemeDescriptor:
        if self.stationary:
            return parse_scheme(self.stationary)
        return self.descriptor().stationary_counterpart()

    def options(self) -> an.AnalysisOptions:
        return an.AnalysisOptions(
            tol_eigen=self.tol_eigen,
            decay_levels=(1, self.ktop),
            grid=self.grid,
            noise_floor=self.noise_floor,
            division_tol=self.division_tol,
        )


def parse_valences(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty valence list {text!r}")
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors are execution errors, not fail verdicts
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nssubdiv", description="Non-stationary quad-mesh subdivision: refinement and regularity analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--scheme", required=True, help="ds, cc, trig-ds:h=<h>, exp-cc:theta=<t>[i], skew-ds:eps=<e>")
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--raw", dest="normalized", action="store_false", default=None, help="use the masks as given")
        g.add_argument("--normalized", dest="normalized", action="store_true", help="rescale masks to unit coset sums")
        sp.add_argument("--out", default="nssubdiv-out", help="output directory")
        sp.add_argument("--tol-eigen", type=float, default=1e-8)

    r = sub.add_parser("refine", help="refine an OBJ quad mesh")
    r.add_argument("input", help="closed OBJ mesh")
    common(r)
    r.add_argument("--levels", type=int, default=3)

    a = sub.add_parser("analyze", help="check convergence and normal-continuity hypotheses")
    common(a)
    a.add_argument("--stationary", default=None, help="stationary reference (default: the scheme's counterpart)")
    a.add_argument("--valences", type=parse_valences, default=list(range(5, 11)), help="e.g. 5..10 or 3,5,7")
    a.add_argument("--levels", type=int, default=8, help="number of rings for the normal-angle series")
    a.add_argument("--ktop", type=int, default=15, help="top level of the decay fit")
    a.add_argument("--grid", type=int, default=64, help="characteristic-map samples per cell side")
    a.add_argument("--depth", type=int, default=6, help="extra refinements per ring cell")
    a.add_argument("--format", choices=("json", "csv"), default="json")
    a.add_argument("--export-rings", action="store_true", help="write ring cells as OBJ point grids")

    lp = sub.add_parser("limit", help="limit point and normal at an extraordinary element")
    lp.add_argument("input", help="closed OBJ mesh")
    common(lp)
    lp.add_argument("--element", type=int, default=None, help="face id (dual schemes) or vertex id (primal)")
    lp.add_argument("--levels", type=int, default=8)
    lp.add_argument("--depth", type=int, default=6)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command, scheme=ns.scheme, normalized=ns.normalized, out=ns.out, tol_eigen=ns.tol_eigen)
    for name in ("levels", "ktop", "grid", "depth", "valences", "stationary", "element", "format", "export_rings", "input"):
        if hasattr(ns, name):
            setattr(cfg, name, getattr(ns, name))
    return cfg


# ---------------------------------------------------------------- commands


def _load_checked(path: str):
    m = load_obj(Path(path).read_bytes())
    report = validate_manifold(m)
    if not report.ok:
        first = report.entries[0]
        raise SubdivisionError(f"invalid input mesh: {first['kind']} ({len(report.entries)} problems)")
    return m


def cmd_refine(cfg: RunConfig) -> int:
    scheme = cfg.descriptor()
    m = _load_checked(cfg.input)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(1, (cfg.levels or 3) + 1):
        m = refine(m, scheme, k)
        path = out / f"mesh_{k}.obj"
        path.write_text(save_obj(m))
        print(f"level {k}: {len(m.vertices)} vertices, {len(m.faces)} faces -> {path}")
    return EXIT_OK


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    path.write_text(buf.getvalue())


def cmd_analyze(cfg: RunConfig) -> int:
    ns = cfg.descriptor()
    stat = cfg.stationary_descriptor()
    an.check_pair(ns, stat)
    opts = cfg.options()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    reports: list[an.ConditionReport] = []
    fits: dict[int, lm.DecayFit] = {}
    angles: dict[int, tuple[list[int], list[float]]] = {}
    for n in cfg.valences:
        for check in (an.verify_convergence_conditions, an.verify_normal_continuity_conditions):
            rep = check(ns, stat, n, opts)
            reports.append(rep)
            print(f"n={n:<3d} {rep.check:<18s} {rep.verdict}" + "".join(
                f"  [{e.name}: fail]" for e in rep.entries if e.status != "pass"))
        if not ns.is_stationary:
            try:
                fits[n] = lm.decay_fit(ns, n, range(1, cfg.ktop + 1), cfg.noise_floor)
            except SubdivisionError:
                pass
        if ns.name != "skew-ds":
            patch = shapes.extraordinary_patch(ns.kind, n)
            rings = an.generate_rings(ns, patch, cfg.levels or 8, cfg.depth)
            est = an.estimate_limit_normal(rings)
            angles[n] = (est.ks, est.theta)
            if cfg.export_rings:
                for ring in rings:
                    for j, g in enumerate(an.ring_point_grids(ring)):
                        (out / f"ring_n{n}_k{ring.k}_cell{j}.obj").write_text(save_point_grid_obj(g))

    ref = stat.with_normalization(False)
    eq = {
        f"order {o}": asymptotic_equivalence(o, lambda k: regular_mask(ns, k), regular_mask(ref, 1), opts.equivalence_levels)
        for o in (0, 1)
    }

    payload = {
        "version": an.REPORT_VERSION,
        "config": json.loads(cfg.to_json()),
        "verdict": "pass" if all(r.passed for r in reports) else "fail",
        "reports": [r.to_dict() for r in reports],
    }
    if cfg.format == "json":
        (out / "report.json").write_text(json.dumps(an.to_jsonable(payload), sort_keys=True, indent=2) + "\n")
    else:
        _write_csv(out / "report.csv", ["valence", "check", "entry", "status"], [
            (r.valence, r.check, e.name, e.status) for r in reports for e in r.entries
        ])
    _write_csv(out / "decay.csv", ["valence", "k", "norm", "fitted"], [
        (n, k, v, f) for n, fit in sorted(fits.items()) for k, v, f in zip(fit.ks, fit.norms, fit.fitted)
    ])
    for label, est in eq.items():
        (out / f"equivalence_order{label[-1]}.csv").write_text(est.to_csv())
    _write_csv(out / "angles.csv", ["valence", "k", "theta_rad"], [
        (n, k, t) for n, (ks, th) in sorted(angles.items()) for k, t in zip(ks, th)
    ])
    if fits:
        plotting.plot_decay(fits, out / "decay.png", f"{ns}: local matrix decay")
    plotting.plot_equivalence(eq, out / "equivalence.png", f"{ns} vs {stat}")
    if angles:
        plotting.plot_angles(angles, out / "angles.png", f"{ns}: ring normal deviation")

    print(f"overall: {payload['verdict']} -> {out}")
    return EXIT_OK if payload["verdict"] == "pass" else EXIT_FAIL


def _pick_element(m, kind: str, element: int | None) -> int:
    if element is not None:
        return element
    cl = classify_elements(m)
    found = cl.extraordinary_faces if kind == "dual" else cl.extraordinary_vertices
    if not found:
        raise SubdivisionError(f"mesh has no extraordinary {'face' if kind == 'dual' else 'vertex'}")
    return int(found[0])


def limit_summary(scheme: SchemeDescriptor, patch, levels: int = 8, depth: int = 6) -> dict:
    lp = lm.limit_point(scheme, patch.n, patch.d)
    rings = an.generate_rings(scheme, patch, levels, depth)
    est = an.estimate_limit_normal(rings, lp.r_c)
    out = {
        "scheme": str(scheme),
        "valence": patch.n,
        "element": patch.element,
        "q0": lp.q0,
        "beta0": lp.beta0,
        "r_c": lp.r_c,
        "n_inf": est.n_inf,
        "levels_used": lp.k_used,
        "increment_ratios": lp.ratios,
        "normal": est.to_dict(),
    }
    if not scheme.is_stationary:
        out["decay"] = lm.decay_fit(scheme, patch.n).to_dict()
    return an.to_jsonable(out)


def cmd_limit(cfg: RunConfig) -> int:
    scheme = cfg.descriptor()
    m = _load_checked(cfg.input)
    element = _pick_element(m, scheme.kind, cfg.element)
    patch = extract_local_neighborhood(m, element, scheme.kind)
    summary = limit_summary(scheme, patch, cfg.levels or 8, cfg.depth)
    text = json.dumps(summary, sort_keys=True, indent=2)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "limit.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


COMMANDS = {"refine": cmd_refine, "analyze": cmd_analyze, "limit": cmd_limit}


def run(cfg: RunConfig) -> int:
    return COMMANDS[cfg.command](cfg)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    try:
        return run(cfg)
    except (SubdivisionError, ValueError, OSError) as exc:
        print(f"nssubdiv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
