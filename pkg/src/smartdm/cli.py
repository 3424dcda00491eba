"""Command-line entry point ``smartdm``.

Exit codes: 0 success, 1 a check failed, 2 bad input, 3 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidInput, SmartDMError, SolverFailure
from .examples import REGISTRY, build_example
from .exact import SolverOptions, solve_dm_problem
from .glm import CandidateModel, ProposedDesign
from .io import (
    cosine,
    dumps_spec,
    load_spec,
    read_csv,
    read_design,
    save_spec,
    sha256_file,
    write_csv,
    write_manifest,
    write_result,
)
from .objective import assemble, value_and_grads
from .pgd import PgdOptions, optimize
from .selection import initial_point, select_size, select_size_robust
from .simulation import default_thresholds, performance_curves, roc_curve

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3
GRADCHECK_TOL = 1e-4

log = logging.getLogger("smartdm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _pgd_options(args, spec):
    kw = dict(spec.extra.get("pgd", {}))
    for name in ("alpha0", "theta", "eta1", "eta2", "max_outer", "max_inner"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    return PgdOptions(**kw)


def _exact_options(args):
    kw = {"hessian": args.hessian}
    if args.max_exact_outer is not None:
        kw["max_outer"] = args.max_exact_outer
    return SolverOptions(**kw)


def _add_pgd_flags(p):
    g = p.add_argument_group("projected gradient options")
    g.add_argument("--alpha0", type=float)
    g.add_argument("--theta", type=float)
    g.add_argument("--eta1", type=float)
    g.add_argument("--eta2", type=float)
    g.add_argument("--max-outer", dest="max_outer", type=int)
    g.add_argument("--max-inner", dest="max_inner", type=int)


def _curves_rows(report):
    return [tuple(row) for row in report.per_model]


def cmd_optimize(args):
    spec_path = Path(args.spec)
    spec = load_spec(spec_path)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ao = assemble(spec)
    Z0, c0 = initial_point(spec, args.seed)
    t0 = time.perf_counter()
    results = {}
    pgd_opts = _pgd_options(args, spec)
    exact_opts = _exact_options(args)
    if args.solver in ("pgd", "both"):
        results["pgd"] = optimize(ao, spec, Z0, c0, pgd_opts)
    if args.solver in ("exact", "both"):
        results["exact"] = solve_dm_problem(spec, ao, (Z0, c0), exact_opts)
    primary = results.get("pgd", results.get("exact"))
    write_result(primary, out)
    if "exact" in results and "pgd" in results:
        write_result(results["exact"], out / "exact")
    design = ProposedDesign(primary.Z_hat, primary.c_hat)
    write_csv(out / "curves.csv", _curves_rows(performance_curves(design, spec.models, args.reps, args.seed)))
    (out / "spec.json").write_text(dumps_spec(spec))
    manifest = {
        "tool": "smartdm",
        "version": __version__,
        "command": "optimize",
        "spec": "spec.json",
        "spec_sha256": sha256_file(out / "spec.json"),
        "solver": args.solver,
        "seed": args.seed,
        "reps": args.reps,
        "pgd_options": dataclasses.asdict(pgd_opts),
        "exact_options": dataclasses.asdict(exact_opts),
        "termination": {k: r.termination for k, r in results.items()},
        "objective": {k: r.F_hat for k, r in results.items()},
        "wall_time_s": time.perf_counter() - t0,
    }
    if len(results) == 2:
        Fp, Fe = results["pgd"].F_hat, results["exact"].F_hat
        gap = abs(Fp - Fe) / max(abs(Fe), 1e-300)
        cs = cosine(results["pgd"].c_hat, results["exact"].c_hat)
        write_csv(out / "comparison.csv", [(Fp, Fe, gap, cs)])
        manifest["comparison"] = {"relative_gap": gap, "contrast_cosine": cs}
        print(f"pgd {Fp!r}  exact {Fe!r}  relative gap {gap:.3e}  contrast cosine {cs:.6f}")
    else:
        print(f"objective {primary.F_hat!r} ({primary.termination})")
    write_manifest(out, manifest)
    bad = [k for k, r in results.items() if r.termination in ("IterationCap", "MaxOuterIterations",
                                                                 "InnerSolveFailure")]
    if bad:
        print(f"solver did not converge: {', '.join(bad)}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_rerun(args):
    bundle = Path(args.bundle)
    man = json.loads((bundle / "manifest.json").read_text())
    if man.get("command") != "optimize":
        raise InvalidInput("only optimize bundles can be re-run")
    ns = argparse.Namespace(spec=str(bundle / man["spec"]), out=args.out, solver=man["solver"],
                            seed=man["seed"], reps=man["reps"], hessian=man["exact_options"]["hessian"],
                            max_exact_outer=man["exact_options"]["max_outer"],
                            **man["pgd_options"])
    return cmd_optimize(ns)


def cmd_select_size(args):
    spec = load_spec(args.spec)
    opts = _pgd_options(args, spec)
    if args.trials > 1:
        p_opt, reports = select_size_robust(spec, args.p0, args.pmax, args.cutoff, opts, args.trials, args.seed)
        rep = reports[0]
        print("per-trial p_opt: " + " ".join(str(r.p_opt) for r in reports))
    else:
        rep = select_size(spec, args.p0, args.pmax, args.cutoff, opts, seed=args.seed)
        p_opt = rep.p_opt
    if args.out:
        write_csv(args.out, rep.rows())
    if rep.degenerate:
        print("warning: objective constant across sizes (degenerate range)", file=sys.stderr)
    print(f"p_opt {p_opt}")
    return EXIT_OK


def cmd_simulate(args):
    spec = load_spec(args.spec)
    Z, c = read_design(args.design)
    report = performance_curves(ProposedDesign(Z, c), spec.models, args.reps, args.seed)
    write_csv(args.out, _curves_rows(report))
    print(f"wrote {len(report.per_model)} rows to {args.out}")
    return EXIT_OK


def _thresholds(text):
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise InvalidInput("--thresholds must look like lo:hi:step") from exc
    if step <= 0 or hi < lo:
        raise InvalidInput("--thresholds needs lo <= hi and step > 0")
    return default_thresholds(lo, hi, step)


def _model_arg(spec, index, snr):
    if not 0 <= index < spec.m:
        raise InvalidInput(f"model index {index} out of range 0..{spec.m - 1}")
    mdl = spec.models[index]
    if snr is not None:
        mdl = CandidateModel(mdl.X, [float(v) for v in snr.split(",")], mdl.c_X)
    return mdl


def cmd_roc(args):
    spec = load_spec(args.spec)
    Z, c = read_design(args.design)
    sig = _model_arg(spec, args.signal, args.signal_snr)
    null = _model_arg(spec, args.null, args.null_snr)
    roc = roc_curve(ProposedDesign(Z, c), sig, null, _thresholds(args.thresholds), args.reps, args.seed)
    write_csv(args.out, roc)
    tc, sens, spec_ = max(((t, tpr, 1 - fpr) for t, fpr, tpr in roc), key=lambda r: r[1] + r[2])
    print(f"best threshold {tc:.3f}: sensitivity {sens:.4f} specificity {spec_:.4f}")
    return EXIT_OK


def cmd_example(args):
    if args.list or not args.name:
        print("\n".join(REGISTRY))
        return EXIT_OK
    spec = build_example(args.name)
    out = Path(args.out or f"{args.name}.json")
    save_spec(spec, out)
    print(f"wrote {args.name} ({spec.m} models, n={spec.n}, p={spec.p}) to {out}")
    return EXIT_OK


def gradient_check(spec, eps=1e-6, seed=0, grads=value_and_grads):
    """Central-difference audit of both gradients at the spec's starting point.

    Errors are relative to the largest gradient entry. Returns
    ``{"Z": (err, index), "c": (err, index)}``.
    """
    ao = assemble(spec)
    Z, c = initial_point(spec, seed)
    rng = np.random.default_rng(seed)
    Z = Z + 1e-2 * rng.standard_normal(Z.shape)
    c = np.asarray(c, dtype=float) + 1e-2 * rng.standard_normal(np.shape(c))
    _, S, T = grads(Z, c, ao)
    out = {}
    for key, X, G in (("Z", Z, S), ("c", c, T)):
        fd = np.empty_like(X)
        for idx in np.ndindex(X.shape):
            Xp, Xm = X.copy(), X.copy()
            Xp[idx] += eps
            Xm[idx] -= eps
            args_p = (Xp, c) if key == "Z" else (Z, Xp)
            args_m = (Xm, c) if key == "Z" else (Z, Xm)
            fd[idx] = (grads(*args_p, ao)[0] - grads(*args_m, ao)[0]) / (2 * eps)
        err = np.abs(fd - G) / max(float(np.max(np.abs(G))), 1e-300)
        worst = np.unravel_index(int(np.argmax(err)), err.shape)
        out[key] = (float(err[worst]), tuple(int(i) for i in worst))
    return out


def cmd_gradcheck(args):
    if not args.eps > 0:
        raise InvalidInput("--eps must be positive")
    spec = load_spec(args.spec)
    res = gradient_check(spec, args.eps, args.seed)
    ok = True
    for key, (err, idx) in res.items():
        print(f"grad_{key}: max relative error {err:.3e} at {idx}")
        ok &= err <= GRADCHECK_TOL
    if not ok:
        print(f"gradient check failed (tolerance {GRADCHECK_TOL:g})", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def build_parser():
    p = _Parser(prog="smartdm", description="Bias-variance optimal design matrices for GLM analyses.")
    p.add_argument("--version", action="version", version=f"smartdm {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    o = sub.add_parser("optimize", help="optimize a design for a spec file")
    o.add_argument("spec")
    o.add_argument("--solver", choices=("pgd", "exact", "both"), default="pgd")
    o.add_argument("--out", required=True)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--reps", type=int, default=0, help="Monte-Carlo replicates for curves.csv")
    o.add_argument("--hessian", default="exact", choices=("sr1", "bfgs", "lsr1", "lbfgs", "exact"))
    o.add_argument("--max-exact-outer", dest="max_exact_outer", type=int)
    _add_pgd_flags(o)
    o.set_defaults(func=cmd_optimize)

    r = sub.add_parser("rerun", help="repeat an optimize run from its bundle manifest")
    r.add_argument("bundle")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_rerun)

    s = sub.add_parser("select-size", help="choose the number of design columns")
    s.add_argument("spec")
    s.add_argument("--p0", type=int, required=True)
    s.add_argument("--pmax", type=int, required=True)
    s.add_argument("--cutoff", type=float, default=0.95)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    _add_pgd_flags(s)
    s.set_defaults(func=cmd_select_size)

    m = sub.add_parser("simulate", help="performance curves with Monte-Carlo columns")
    m.add_argument("spec")
    m.add_argument("design", help="bundle directory holding Z_hat.csv and c_hat.csv")
    m.add_argument("--reps", type=int, default=1000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", default="curves.csv")
    m.set_defaults(func=cmd_simulate)

    c = sub.add_parser("roc", help="ROC curve of the T-threshold detection rule")
    c.add_argument("spec")
    c.add_argument("design")
    c.add_argument("--signal", type=int, default=0, help="index of the signal model")
    c.add_argument("--null", type=int, default=-1, help="index of the null model")
    c.add_argument("--signal-snr", dest="signal_snr")
    c.add_argument("--null-snr", dest="null_snr")
    c.add_argument("--reps", type=int, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--thresholds", default="-5:15:0.05")
    c.add_argument("--out", default="roc.csv")
    c.set_defaults(func=cmd_roc)

    e = sub.add_parser("example", help="write a named example spec")
    e.add_argument("name", nargs="?")
    e.add_argument("--out")
    e.add_argument("--list", action="store_true")
    e.set_defaults(func=cmd_example)

    g = sub.add_parser("gradcheck", help="finite-difference audit of the analytic gradients")
    g.add_argument("spec")
    g.add_argument("--eps", type=float, default=1e-6)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "null", None) == -1:
        args.null = None
    try:
        if args.command == "roc" and args.null is None:
            args.null = load_spec(args.spec).m - 1
        return args.func(args)
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InvalidInput, SmartDMError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
