"""Command-line surface: analyze a model file, verify it against the
truncated-chain oracle, emit domain-plot data, and generate example models.

Exit codes: 0 ok, 1 invalid model, 2 unstable model, 3 verification failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import asymptotics, geometry, netgen, oracle
from .model import (
    ModelFileError,
    UnstableModelError,
    ValidationError,
    load_model,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_UNSTABLE = 2
EXIT_VERIFY_FAILED = 3


def _dump(body: dict, fmt: str, out: str | None) -> None:
    if fmt == "json":
        text = json.dumps(body, indent=2) + "\n"
    else:
        text = _render_text(body)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _render_text(body: dict) -> str:
    lines = []
    st = body.get("stability", {})
    lines.append(f"stable: {st.get('stable')}  (condition: {st.get('matched_condition')})")
    if "geometry" in body:
        g = body["geometry"]
        lines.append(f"category: {g['category']}")
        lines.append(f"tau: ({g['tau'][0]:.12g}, {g['tau'][1]:.12g})")
    if "sigma" in body:
        s = body["sigma"]
        lines.append(f"sigma_plus: {s['sigma_plus_1']}, {s['sigma_plus_2']}  "
                     f"sigma_d: {s['sigma_d']}")
    for name, cls in body.get("classes", {}).items():
        lines.append(f"{name:10s} ~ {cls['human']}   [{cls['provenance']}]")
    for name, rep in body.get("verification", {}).items():
        status = "pass" if rep["passed"] else "FAIL"
        lines.append(
            f"verify {name:10s} {status}  rate_gap={rep['rate_gap']:.3g} "
            f"kappa_gap={rep['kappa_gap']:.3g} b_hat={rep['fitted']['b_hat']:.3g}")
    return "\n".join(lines) + "\n"


def _load(path: str):
    return load_model(Path(path).read_text())


def run_analyze(args) -> int:
    try:
        model = _load(args.model)
    except (ModelFileError, ValidationError) as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = asymptotics.full_report(model, source=args.model)
    _dump(report.to_dict(), args.format, args.out)
    return EXIT_OK if report.stable else EXIT_UNSTABLE


def run_verify(args) -> int:
    try:
        model = _load(args.model)
    except (ModelFileError, ValidationError) as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = asymptotics.full_report(model, source=args.model)
    if not report.stable:
        _dump(report.to_dict(), args.format, args.out)
        return EXIT_UNSTABLE
    reports = oracle.verify_model(
        model, n_grid=args.n_grid, window_frac=tuple(args.window),
        tol_rate=args.tol_rate, tol_kappa=args.tol_kappa)
    body = report.to_dict()
    body["verification"] = {
        name: {
            "passed": r.passed,
            "rate_gap": r.rate_gap,
            "kappa_gap": r.kappa_gap,
            "periodic_match": r.periodic_match,
            "fitted": {
                "rate_hat": r.fitted.rate_hat,
                "kappa_hat": r.fitted.kappa_hat,
                "kappa_selected": r.fitted.kappa_selected,
                "b_hat": r.fitted.b_hat,
                "window": list(r.fitted.window),
                "residual_norm": r.fitted.residual_norm,
            },
        }
        for name, r in reports.items()
    }
    body = asymptotics._round12(body)
    _dump(body, args.format, args.out)
    failing = [name for name, r in reports.items() if not r.passed]
    if failing:
        print("verification failed for: " + ", ".join(failing), file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def run_plot(args) -> int:
    try:
        model = _load(args.model)
    except (ModelFileError, ValidationError) as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_INVALID
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        for curve, fname in (("gamma_plus", "gamma_plus.csv"),
                             ("gamma1", "gamma1.csv"),
                             ("gamma2", "gamma2.csv"),
                             ("domain", "domain.csv")):
            sample = geometry.sample_boundary(model, curve, args.n)
            rows = ["curve,theta1,theta2,u1,u2"]
            for (t1, t2), (u1, u2) in zip(sample.theta, sample.u):
                rows.append(f"{curve},{t1:.12g},{t2:.12g},{u1:.12g},{u2:.12g}")
            (outdir / fname).write_text("\n".join(rows) + "\n")
        geo = geometry.compute_geometry(model)
        sig = asymptotics.sigma_points(model)
        pts = [("u1_r", geo.axis1.u_r), ("u2_r", geo.axis2.u_r),
               ("u1_max", geo.axis1.u_max_pt), ("u2_max", geo.axis2.u_max_pt),
               ("u1_gamma", geo.axis1.u_gamma), ("u2_gamma", geo.axis2.u_gamma),
               ("tau", geo.tau)]
        if sig.sigma_plus_1 is not None:
            pts.append(("sigma_plus_1", (sig.sigma_plus_1, 1.0)))
        if sig.sigma_plus_2 is not None:
            pts.append(("sigma_plus_2", (1.0, sig.sigma_plus_2)))
        if sig.sigma_d is not None:
            pts.append(("sigma_d", (sig.sigma_d, sig.sigma_d)))
        rows = ["name,u1,u2"]
        for name, pt in pts:
            if pt is None:
                continue
            rows.append(f"{name},{pt[0]:.12g},{pt[1]:.12g}")
        (outdir / "points.csv").write_text("\n".join(rows) + "\n")
    except UnstableModelError as exc:
        print(f"unstable model: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    return EXIT_OK


def run_gen(args) -> int:
    if args.family == "jackson":
        lam, mu1, mu2, p, q = args.params
        model = netgen.jackson_model(lam, mu1, mu2, p, q)
        if not netgen.JacksonSimParams(lam, mu1, mu2, p, q).stable():
            print("unstable", file=sys.stderr)
    elif args.family == "mm1":
        l1, m1, l2, m2 = args.params
        model = netgen.independent_mm1(l1, m1, l2, m2)
    else:
        print(f"unknown family {args.family!r}", file=sys.stderr)
        return EXIT_INVALID
    text = json.dumps(model.to_document(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qbd-tails",
        description="Tail asymptotics of two-dimensional reflecting random walks")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", required=True, help="model JSON file")
    common.add_argument("--out", default=None, help="output path")
    common.add_argument("--format", choices=("json", "text"), default="json")

    sub.add_parser("analyze", parents=[common],
                   help="stability, geometry and asymptotic classes")

    vp = sub.add_parser("verify", parents=[common],
                        help="analyze plus oracle verification")
    vp.add_argument("--n-grid", type=int, default=300)
    vp.add_argument("--window", type=float, nargs=2, default=(0.3, 0.6),
                    metavar=("A", "B"))
    vp.add_argument("--tol-rate", type=float, default=5e-3)
    vp.add_argument("--tol-kappa", type=float, default=0.2)

    pp = sub.add_parser("plot", parents=[common], help="emit domain CSV data")
    pp.add_argument("--n", type=int, default=200, help="points per curve")

    gp = sub.add_parser("gen", help="generate an example model file")
    gp.add_argument("family", choices=("jackson", "mm1"))
    gp.add_argument("params", type=float, nargs="+",
                    help="jackson: LAM MU1 MU2 P Q; mm1: L1 M1 L2 M2")
    gp.add_argument("--out", default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "gen":
        need = 5 if args.family == "jackson" else 4
        if len(args.params) != need:
            print(f"{args.family} needs {need} parameters", file=sys.stderr)
            return EXIT_INVALID
        return run_gen(args)
    if args.command == "analyze":
        return run_analyze(args)
    if args.command == "verify":
        n0, n1 = args.window
        if not (0.0 < n0 < n1 < 1.0):
            print("window fractions must satisfy 0 < A < B < 1", file=sys.stderr)
            return EXIT_INVALID
        if args.n_grid < 32:
            print("grid must be at least 32", file=sys.stderr)
            return EXIT_INVALID
        return run_verify(args)
    if args.command == "plot":
        return run_plot(args)
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
