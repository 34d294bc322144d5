"""Command-line entry point.

Problem files are JSON::

    {"algebra": "sl2",
     "sites": [{"z": [0, 0], "weight": 1}, {"z": [1, 0], "weight": 1}],
     "solver": {"starts": 64, "seed": 0}}

Complex numbers are written as [re, im] everywhere.  Every subcommand
prints a JSON report (sorted keys, timing kept in its own field) and, with
``--out DIR``, also writes it to DIR together with CSV tables.  Exit codes:
0 success, 1 verification failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, bethe, gaudin, monodromy, oper, repcore, sov
from .errors import GaudinLabError, InvalidInputError

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


# serialization ------------------------------------------------------------------


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_real(obj.real), _real(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _real(obj)
    return obj


def _real(x):
    x = float(x)
    if not math.isfinite(x):
        return None
    return 0.0 if x == 0 else x


def parse_complex(value, where="value"):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            return complex(float(value[0]), float(value[1]))
        except (TypeError, ValueError):
            pass
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    raise InvalidInputError(f"{where}: expected a number or a [re, im] pair, got {value!r}")


def _parse_pair_arg(text, name):
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise InvalidInputError(f"--{name}: expected RE,IM") from None
    if len(parts) == 1:
        parts.append(0.0)
    if len(parts) != 2:
        raise InvalidInputError(f"--{name}: expected RE,IM")
    return complex(*parts)


def _parse_coeffs(text, name):
    try:
        return tuple(complex(p.strip().replace(" ", "")) for p in text.split(","))
    except ValueError:
        raise InvalidInputError(f"--{name}: expected comma-separated coefficients") from None


def _parse_weight(text):
    parts = [p for p in str(text).split(",") if p.strip()]
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise InvalidInputError(f"invalid weight {text!r}") from None
    return vals[0] if len(vals) == 1 else vals


class Inputs:
    """Reads input files and keeps their bytes for the report digest."""

    def __init__(self):
        self.digest = hashlib.sha256()
        self.names = []

    def load(self, path):
        p = Path(path)
        try:
            data = p.read_bytes()
        except OSError as exc:
            raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from None
        self.digest.update(data)
        self.names.append(str(path))
        try:
            return json.loads(data)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: line {exc.lineno}: {exc.msg}") from None

    def hexdigest(self):
        return self.digest.hexdigest()


def problem_from_json(data, source="problem"):
    if not isinstance(data, dict):
        raise InvalidInputError(f"{source}: top level must be an object")
    algebra = data.get("algebra", "sl2")
    sites = data.get("sites")
    if not isinstance(sites, list) or not sites:
        raise InvalidInputError(f"{source}: 'sites' must be a nonempty list")
    pts, wts = [], []
    for k, s in enumerate(sites):
        if not isinstance(s, dict) or "z" not in s or "weight" not in s:
            raise InvalidInputError(f"{source}: sites[{k}] needs fields 'z' and 'weight'")
        pts.append(parse_complex(s["z"], f"{source}: sites[{k}].z"))
        w = s["weight"]
        wts.append(tuple(w) if isinstance(w, list) else w)
    try:
        return gaudin.GaudinProblem(algebra, tuple(pts), tuple(wts))
    except InvalidInputError as exc:
        raise InvalidInputError(f"{source}: {exc}") from None


def problem_to_json(problem):
    return {
        "algebra": problem.algebra,
        "sites": [
            {"z": [p.real, p.imag], "weight": w[0] if len(w) == 1 else list(w)}
            for p, w in zip(problem.points, problem.weights)
        ],
    }


def config_to_json(cfg):
    return {"roots": list(cfg.roots), "colors": list(cfg.colors), "residual": cfg.residual}


def configs_from_json(data, source="roots"):
    """Accepts {"roots": [...], "colors": [...]}, a list of roots, or a
    report with a "configurations" list (as written by ``bethe solve``)."""
    if isinstance(data, dict) and "result" in data:
        data = data["result"]
    if isinstance(data, dict) and "configurations" in data:
        items = data["configurations"]
    elif isinstance(data, dict) and "roots" in data:
        items = [data]
    elif isinstance(data, list):
        items = [{"roots": data}]
    else:
        raise InvalidInputError(f"{source}: expected 'roots' or 'configurations'")
    out = []
    for k, item in enumerate(items):
        if not isinstance(item, dict) or not isinstance(item.get("roots"), list):
            raise InvalidInputError(f"{source}: configuration {k} needs a 'roots' list")
        roots = [parse_complex(r, f"{source}: configuration {k} root {j}")
                 for j, r in enumerate(item["roots"])]
        out.append(bethe.BetheConfiguration(tuple(roots), item.get("colors")))
    return out


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["index", "re", "im", "residual"])
        for idx, val, res in rows:
            wr.writerow([idx, repr(float(val.real)), repr(float(val.imag)), repr(float(res))])


# commands -----------------------------------------------------------------------


def cmd_gaudin_spectrum(args, inputs):
    problem = problem_from_json(inputs.load(args.problem))
    sector = _parse_weight(args.sector)
    rep = gaudin.diagonalize_sector(problem, sector, seed=args.seed)
    result = {
        "problem": problem_to_json(problem),
        "sector": list(rep.lam_inf),
        "eigenvalues": rep.eigenvalues,
        "residuals": rep.residuals,
        "spectral_scale": rep.scale,
    }
    tables = {
        f"eigenvalues_{k:03d}.csv": [(i, mu, rep.residuals[k]) for i, mu in enumerate(row)]
        for k, row in enumerate(rep.eigenvalues)
    }
    return result, True, tables


def _m_arg(problem, text):
    try:
        parts = [int(p) for p in str(text).split(",")]
    except ValueError:
        raise InvalidInputError(f"--m: invalid value {text!r}") from None
    if problem.algebra == repcore.SL2:
        if len(parts) != 1:
            raise InvalidInputError("--m takes one integer for sl2")
        return parts[0]
    if len(parts) != 2:
        raise InvalidInputError("--m takes two counts 'm1,m2' for sl3")
    return tuple(parts)


def cmd_bethe_solve(args, inputs):
    data = inputs.load(args.problem)
    problem = problem_from_json(data)
    solver = data.get("solver", {}) if isinstance(data, dict) else {}
    starts = args.starts if args.starts is not None else solver.get("starts")
    target = sov.verma_problem(problem) if args.verma else problem
    m = _m_arg(problem, args.m)
    res = bethe.solve(target, m, starts=starts, seed=args.seed)
    result = {
        "problem": problem_to_json(problem),
        "verma": bool(args.verma),
        "m": m,
        "configurations": [config_to_json(c) for c in res],
        "starts": res.starts,
        "converged": res.converged,
        "failures": dict(sorted(res.failures.items())),
    }
    tables = {
        f"roots_{k:03d}.csv": [(j, w, c.residual) for j, w in enumerate(c.roots)]
        for k, c in enumerate(res)
    }
    return result, True, tables


def cmd_bethe_verify(args, inputs):
    problem = problem_from_json(inputs.load(args.problem))
    configs = configs_from_json(inputs.load(args.roots))
    hams = gaudin.hamiltonians(problem)
    rows, ok = [], True
    for cfg in configs:
        rep = bethe.verify_eigen(problem, cfg, hams)
        pkg = bethe.eigenvalues_from_roots(problem, cfg)
        rows.append({
            "roots": list(cfg.roots),
            "bethe_residual": bethe.residual_norm(problem, cfg),
            "eigen_residual": rep.residual,
            "passed": rep.passed,
            "mu": rep.mu,
            "lam_inf": pkg.lam_inf,
            "infinity_defect": pkg.infinity_defect,
        })
        ok &= rep.passed
    return {"problem": problem_to_json(problem), "verifications": rows}, ok, {}


def cmd_bethe_audit(args, inputs):
    data = inputs.load(args.problem)
    problem = problem_from_json(data)
    solver = data.get("solver", {}) if isinstance(data, dict) else {}
    rep = bethe.completeness_audit(problem, seed=args.seed, starts=solver.get("starts"))
    sectors = [{
        "m": s.m,
        "lam_inf": s.lam_inf,
        "dimension": s.dimension,
        "solutions": s.solutions,
        "verified": s.verified,
        "matched": s.matched,
        "worst_residual": s.worst_residual,
        "worst_mismatch": s.worst_mismatch,
        "unmatched": list(s.unmatched),
        "configurations": [config_to_json(c) for c in s.configurations],
        "independence": s.independence,
    } for s in rep.sectors]
    result = {
        "problem": problem_to_json(problem),
        "sectors": sectors,
        "total_dimension": rep.total_dimension,
        "verified_states": rep.verified_count,
        "complete": rep.complete,
    }
    return result, rep.complete, {}


def cmd_oper_pm(args, inputs):
    pm = oper.pm_polynomial(args.m)
    terms = [{"monomial": list(mono), "coefficient": str(c)} for mono, c in pm.poly.sorted_terms()]
    result = {
        "m": pm.m,
        "variables": list(pm.variables),
        "polynomial": pm.format(),
        "terms": terms,
        "weighted_degrees": sorted(pm.weighted_degrees()),
    }
    return result, True, {}


def _series_from_json(data):
    if isinstance(data, dict):
        data = data.get("q")
    if not isinstance(data, list) or not data:
        raise InvalidInputError("series file needs a nonempty list 'q' of coefficients q_0, q_-1, ...")
    return np.array([parse_complex(v, f"q[{k}]") for k, v in enumerate(data)])


def cmd_oper_riccati(args, inputs):
    q = _series_from_json(inputs.load(args.q))
    depth = args.depth if args.depth is not None else min(oper.DEFAULT_DEPTH, q.size - 1)
    branches = oper.riccati_branches(q, depth)
    out = []
    for b in branches:
        item = {
            "leading": b.leading,
            "solvable": b.solvable,
            "resonant_step": b.resonant_step,
            "obstruction": b.obstruction,
            "free_parameter": b.free_parameter,
            "chi": b.chi.coefficients if b.chi is not None else None,
        }
        if b.chi is not None:
            back = oper.miura_series(b.chi).coefficients
            item["roundtrip_error"] = float(np.max(np.abs(back - q[: depth + 1])))
        out.append(item)
    return {"depth": depth, "q": q[: depth + 1], "branches": out}, True, {}


def cmd_monodromy(args, inputs):
    problem = problem_from_json(inputs.load(args.problem))
    configs = configs_from_json(inputs.load(args.roots))
    rows, ok = [], True
    for cfg in configs:
        if problem.algebra == repcore.SL2:
            op = monodromy.bethe_oper(problem, cfg)
        else:
            op = oper.sl3_factorization_check(problem, cfg).oper
        rep = monodromy.monodromy_report(op, tol=args.tol)
        rows.append({
            "roots": list(cfg.roots),
            "base": rep.base,
            "loops": [t.matrix for t in rep.loops],
            "infinity": rep.infinity.matrix,
            "trivial": list(rep.trivial),
            "trivial_at_infinity": rep.trivial_at_infinity,
            "distances": list(rep.distances),
            "product_defect": rep.product_defect,
            "det_defect": rep.worst_det_defect,
        })
        ok &= rep.all_trivial and rep.product_defect < args.tol
    return {"problem": problem_to_json(problem), "tolerance": args.tol, "reports": rows}, ok, {}


def cmd_sov_check(args, inputs):
    problem = problem_from_json(inputs.load(args.problem))
    configs = configs_from_json(inputs.load(args.roots))
    rng = np.random.default_rng(args.seed)
    samples = problem.centroid + problem.scale * (rng.normal(size=5) + 1j * rng.normal(size=5))
    sk = sov.sklyanin_identity(problem, samples) if problem.is_finite else None
    rows, ok = [], sk is None or sk < 1e-11
    for cfg in configs:
        pkg = bethe.eigenvalues_from_roots(problem, cfg)
        sep = sov.separated_residual(problem, pkg, cfg)
        cutoff = args.cutoff if args.cutoff is not None else cfg.m + 2
        prop = sov.verma_proportionality(problem, cfg, cutoff)
        dq = (sov.degauged_potential(problem, pkg.mu) - pkg.q()).max_abs_coefficient()
        rows.append({
            "roots": list(cfg.roots),
            "separated_residual": sep.residual,
            "separated_passed": sep.passed,
            "proportionality_constant": prop.constant,
            "proportionality_deviation": prop.deviation,
            "verma_eigen_residual": prop.eigen_residual,
            "degauged_potential_defect": dq,
        })
        ok &= sep.passed and prop.deviation < 1e-10
    result = {"problem": problem_to_json(problem), "sklyanin_deviation": sk, "checks": rows}
    return result, ok, {}


def cmd_sl3_check(args, inputs):
    problem = problem_from_json(inputs.load(args.problem))
    configs = configs_from_json(inputs.load(args.roots))
    rows, ok = [], True
    for cfg in configs:
        rep = oper.sl3_factorization_check(problem, cfg)
        rows.append({
            "roots": list(cfg.roots),
            "colors": list(cfg.colors),
            "bethe_residuals": rep.bethe_residuals,
            "root_residues": rep.root_residues,
            "factorizes": rep.factorizes,
            "consistent_with_bethe": rep.consistent_with_bethe,
            "mu": rep.oper.mu,
            "c1": rep.oper.c1,
            "c2": rep.oper.c2,
        })
        ok &= rep.factorizes
    return {"problem": problem_to_json(problem), "checks": rows}, ok, {}


def cmd_tq(args, inputs):
    data = oper.QMiuraData(
        q=_parse_pair_arg(args.q, "q"),
        numerator=_parse_coeffs(args.lambda_num, "lambda-num"),
        denominator=_parse_coeffs(args.lambda_den, "lambda-den"),
        base=_parse_pair_arg(args.base, "base"),
        length=args.lattice,
    )
    rep = oper.qmiura_tq(data)
    ident = oper.tq_operator_identity(data, seed=args.seed)
    ok = rep.residual < 1e-12 and ident < 1e-12
    result = {"residual": rep.residual, "operator_identity": ident, "lattice": args.lattice}
    return result, ok, {}


# parser -------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="gaudinlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=Path, default=None, help="directory for report and CSV files")

    g = sub.add_parser("gaudin").add_subparsers(dest="action", required=True)
    sp = g.add_parser("spectrum", help="sector diagonalization oracle")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--sector", required=True, help="lam_inf, e.g. 0 or 1,0")
    common(sp)
    sp.set_defaults(func=cmd_gaudin_spectrum)

    b = sub.add_parser("bethe").add_subparsers(dest="action", required=True)
    sp = b.add_parser("solve", help="solve the Bethe equations")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--m", required=True, help="number of roots (m1,m2 for sl3)")
    sp.add_argument("--starts", type=int, default=None)
    sp.add_argument("--verma", action="store_true", help="use Verma weights -lam-2")
    common(sp)
    sp.set_defaults(func=cmd_bethe_solve)
    sp = b.add_parser("verify", help="verify Bethe vectors")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--roots", required=True)
    common(sp)
    sp.set_defaults(func=cmd_bethe_verify)
    sp = b.add_parser("audit", help="completeness audit")
    sp.add_argument("--problem", required=True)
    common(sp)
    sp.set_defaults(func=cmd_bethe_audit)

    o = sub.add_parser("oper").add_subparsers(dest="action", required=True)
    sp = o.add_parser("pm", help="obstruction polynomial P_m")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--text", action="store_true", help="print only the polynomial")
    common(sp)
    sp.set_defaults(func=cmd_oper_pm)
    sp = o.add_parser("riccati", help="Riccati branches of a local series")
    sp.add_argument("--q", required=True)
    sp.add_argument("--depth", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_oper_riccati)

    sp = sub.add_parser("monodromy", help="loop matrices of the Bethe oper")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--roots", required=True)
    sp.add_argument("--tol", type=float, default=monodromy.TRIVIALITY_TOL)
    common(sp)
    sp.set_defaults(func=cmd_monodromy)

    s = sub.add_parser("sov").add_subparsers(dest="action", required=True)
    sp = s.add_parser("check", help="separation of variables checks")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--roots", required=True)
    sp.add_argument("--cutoff", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_sov_check)

    s3 = sub.add_parser("sl3").add_subparsers(dest="action", required=True)
    sp = s3.add_parser("check", help="sl3 factorization report")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--roots", required=True)
    common(sp)
    sp.set_defaults(func=cmd_sl3_check)

    sp = sub.add_parser("tq", help="TQ relation on a q-lattice")
    sp.add_argument("--lambda-num", required=True, help="numerator coefficients, highest first")
    sp.add_argument("--lambda-den", required=True, help="denominator coefficients, highest first")
    sp.add_argument("--q", required=True, help="RE,IM")
    sp.add_argument("--base", default="1,0", help="lattice base point RE,IM")
    sp.add_argument("--lattice", type=int, default=32)
    common(sp)
    sp.set_defaults(func=cmd_tq)
    return p


def _command_echo(argv):
    return " ".join(argv)


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    inputs = Inputs()
    t0 = time.perf_counter()
    try:
        result, ok, tables = args.func(args, inputs)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except GaudinLabError as exc:
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    report = {
        "command": _command_echo(argv),
        "input_digest": inputs.hexdigest(),
        "inputs": inputs.names,
        "seed": args.seed,
        "result": to_jsonable(result),
        "status": "ok" if ok else "verification_failed",
        "timing": {"wall_seconds": time.perf_counter() - t0},
        "version": __version__,
    }
    text = json.dumps(report, sort_keys=True, indent=2)
    if getattr(args, "text", False):
        print(result["polynomial"])
        return EXIT_OK
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.json").write_text(text + "\n")
        for name, rows in tables.items():
            write_csv(args.out / name, rows)
    print(text)
    if not ok:
        print("verification failed", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
