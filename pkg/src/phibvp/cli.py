"""Command line: ``phibvp verify|solve|report``.

Exit codes: 0 success, 2 a condition or containment violated, 3 only
inconclusive deviations, 4 continuation stalled, 64 bad configuration,
66 missing or unreadable input.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from .apriori import blowup_solution
from .bounding import BoundingFn, BoxSet, SublevelSet, VectorField, ball_function
from .convexity import convexity_via_condition_C
from .bvp_solver import continuation_solve, write_solution_csv, write_trace
from .errors import BuildError, ContinuationStalled, InputError, NoConvergence
from .phi_ops import phi_from_config
from .reports import INCONCLUSIVE, jsonable
from .sampling import SamplingConfig
from .scenarios import SCENARIOS, Scenario, build_poincare_miranda, build_scenario, build_sublevel

SCHEMA = 1
EXIT_OK, EXIT_VIOLATED, EXIT_INCONCLUSIVE, EXIT_STALLED = 0, 2, 3, 4
EXIT_USAGE, EXIT_NOINPUT = 64, 66

CONFIG_KEYS = {"scenario", "params", "system", "phi", "bound_set", "solver", "sampling", "seed", "nagumo"}

CONDITION_SOURCES = {
    "cond_Vprime": "regular level set of the bounding function",
    "cond_C": "tangent-Hessian convexity criterion",
    "H_V": "bounding-function non-tangency",
    "hartman": "Hartman-Knobloch (ball)",
    "poincare_miranda": "Poincare-Miranda (box)",
    "outer_normal": "outer-normal field condition (convex set)",
    "H_phi": "coercivity of phi",
    "H_H": "Lienard sign condition beyond a radius",
    "H_H_plus": "Lienard lower bound on <h(x), x>",
    "lienard_i": "Lienard alternative (i): growth of <h(x), x>",
    "lienard_ii": "Lienard alternative (ii): shifted sign condition",
    "lienard_iii": "Lienard alternative (iii): componentwise signs",
    "villari": "generalized Villari condition",
    "rayleigh_parallel": "Rayleigh friction parallel to velocity",
    "rayleigh_bounded": "Rayleigh friction close to a gradient",
    "NH1": "Nagumo-Hartman growth (NH1)",
    "NH2": "Nagumo-Hartman growth (NH2)",
    "sup_bound": "sup bound from projections and L^p derivative",
    "degree": "degree one via convex homotopy",
    "blowup_integrability": "bounded solution with blowing-up derivative",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# configuration


def load_config(args) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise FileNotFoundError(str(exc)) from exc
        try:
            cfg = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    if getattr(args, "scenario", None):
        cfg["scenario"] = args.scenario
    if getattr(args, "N", None):
        cfg.setdefault("solver", {})["N"] = args.N
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if not cfg:
        raise UsageError("empty configuration: give --config or --scenario")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if ("scenario" in cfg) == ("system" in cfg):
        raise UsageError("config needs exactly one of 'scenario' or 'system'")
    return cfg


def _sympy_field(exprs: List[str], n: int, with_y: bool = True):
    import sympy as sp

    t = sp.Symbol("t")
    xs = sp.symbols(f"x1:{n + 1}")
    ys = sp.symbols(f"y1:{n + 1}")
    if len(exprs) != n:
        raise UsageError(f"expected {n} field components, got {len(exprs)}")
    try:
        parsed = [sp.sympify(e, locals={"pi": sp.pi}) for e in exprs]
    except (sp.SympifyError, TypeError) as exc:
        raise UsageError(f"cannot parse field expression: {exc}") from exc
    allowed = {t, *xs, *ys}
    for e in parsed:
        extra = e.free_symbols - allowed
        if extra:
            raise UsageError(f"unknown symbols in field: {sorted(map(str, extra))}")
    uses_y = any(e.free_symbols & set(ys) for e in parsed)
    fns = [sp.lambdify((t, *xs, *ys), e, "numpy") for e in parsed]

    def f(tt, x, y=None):
        tt = np.asarray(tt, dtype=float)
        y = np.zeros_like(x) if y is None else y
        args = [tt] + [x[..., i] for i in range(n)] + [y[..., i] for i in range(n)]
        shape = np.broadcast_shapes(tt.shape, x.shape[:-1])
        return np.stack([np.broadcast_to(np.asarray(fn(*args), dtype=float), shape) for fn in fns], axis=-1)

    return f, uses_y


def _sympy_bounding(expr: str, n: int, level: float) -> BoundingFn:
    import sympy as sp

    xs = sp.symbols(f"x1:{n + 1}")
    try:
        V = sp.sympify(expr)
    except (sp.SympifyError, TypeError) as exc:
        raise UsageError(f"cannot parse V: {exc}") from exc
    if V.free_symbols - set(xs):
        raise UsageError("V may only use x1..xn")
    grad = [sp.diff(V, xi) for xi in xs]
    hess = [[sp.diff(g, xj) for xj in xs] for g in grad]
    fV = sp.lambdify(xs, V, "numpy")
    fg = sp.lambdify(xs, grad, "numpy")
    fh = sp.lambdify(xs, hess, "numpy")

    def cols(x):
        return [x[..., i] for i in range(n)]

    def value(x):
        return np.broadcast_to(np.asarray(fV(*cols(x)), dtype=float), x.shape[:-1])

    def gradient(x):
        return np.stack([np.broadcast_to(np.asarray(g, dtype=float), x.shape[:-1]) for g in fg(*cols(x))], -1)

    def hessian(x):
        return np.array([[float(v) for v in row] for row in fh(*cols(x))])

    return BoundingFn(value, n, float(level), gradient, hessian, name=expr)


def build_from_config(cfg: dict) -> Scenario:
    try:
        if "scenario" in cfg:
            name = cfg["scenario"]
            if not isinstance(name, str) or name not in SCENARIOS:
                raise UsageError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}")
            params = dict(cfg.get("params", {}))
            if "phi" in cfg and name not in ("remark33_1", "remark33_2", "remark33_3"):
                n = params.get("n", {"poincare_miranda": 1, "lienard_iii": 1, "blowup": 1}.get(name, 2))
                params["phi"] = phi_from_config(cfg["phi"], n)
            bs = cfg.get("bound_set")
            if bs:
                if "ball" in bs:
                    params["R"] = float(bs["ball"]["R"])
                elif "box" in bs:
                    params["box"] = BoxSet(tuple(bs["box"]["lo"]), tuple(bs["box"]["hi"]))
                else:
                    raise UsageError("scenario bound_set must be 'ball' or 'box'")
            return build_scenario(name, **params)
        return _build_system(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"malformed configuration: {exc}") from exc


def _build_system(cfg: dict) -> Scenario:
    sysc = cfg["system"]
    if not isinstance(sysc, dict) or "f" not in sysc:
        raise UsageError("system needs a list of field expressions under 'f'")
    n = int(sysc.get("n", len(sysc["f"])))
    T = float(sysc.get("T", 1.0))
    f_fn, uses_y = _sympy_field(sysc["f"], n)
    f = VectorField(f_fn, n, T, depends_on_y=uses_y, name=sysc.get("name", "system"))
    phi = phi_from_config(cfg.get("phi", {}), n)
    bs = cfg.get("bound_set")
    if not bs:
        raise UsageError("a user system needs a bound_set")
    K = cfg.get("nagumo", {}).get("K")
    if uses_y and K is None:
        raise UsageError("a field depending on y needs nagumo.K")
    if "box" in bs:
        if uses_y:
            raise UsageError("box bound sets support fields of (t, x) only")
        box = BoxSet(tuple(bs["box"]["lo"]), tuple(bs["box"]["hi"]))
        fx = VectorField(lambda t, x: f_fn(t, x), n, T, name=f.name)
        sc = build_poincare_miranda(box, fx, T, phi)
        sc.name = f.name
        return sc
    if "ball" in bs:
        center = np.asarray(bs["ball"].get("center", [0.0] * n), dtype=float)
        V = ball_function(float(bs["ball"]["R"]), center)
        P0 = center
    elif "sublevel" in bs:
        sub = bs["sublevel"]
        V = _sympy_bounding(sub["V"], n, float(sub.get("level", 0.0)))
        P0 = np.asarray(sub.get("center", [0.0] * n), dtype=float)
    else:
        raise UsageError("bound_set must be one of 'ball', 'box', 'sublevel'")
    return build_sublevel(f, V, P0, phi, name=f.name, K=K)


def sampling_from_config(cfg: dict) -> SamplingConfig:
    s = dict(cfg.get("sampling", {}))
    if "seed" in cfg:
        s["seed"] = int(cfg["seed"])
    try:
        return SamplingConfig.from_dict(s)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# commands


def verify_document(sc: Scenario, sampling: SamplingConfig, cfg: dict):
    reports = sc.verify(sampling)
    conditions = {}
    mismatches = []
    for cid, rep in sorted(reports.items()):
        entry = rep.to_dict()
        exp = sc.expected.get(cid)
        entry["expected"] = exp
        entry["source"] = CONDITION_SOURCES.get(cid, cid)
        conditions[cid] = entry
    for cid, exp in sc.expected.items():
        got = reports[cid].verdict if cid in reports else INCONCLUSIVE
        if got != exp:
            mismatches.append(got)
    if not mismatches:
        worst = EXIT_OK
    elif all(g == INCONCLUSIVE for g in mismatches):
        worst = EXIT_INCONCLUSIVE
    else:
        worst = EXIT_VIOLATED
    status = {EXIT_OK: "as_expected", EXIT_VIOLATED: "violated", EXIT_INCONCLUSIVE: "inconclusive"}[worst]
    doc = {
        "schema": SCHEMA,
        "command": "verify",
        "scenario": sc.name,
        "config": cfg,
        "conditions": conditions,
        "constants": sc.constants,
        "nagumo": sc.nagumo,
        "degree": conditions["degree"]["details"] if "degree" in conditions else None,
        "convexity": _convexity_section(sc, sampling),
        "status": status,
        "exit_code": worst,
    }
    return jsonable(doc), worst


def _convexity_section(sc: Scenario, sampling: SamplingConfig):
    if not isinstance(sc.bound_set, SublevelSet):
        return None
    n_dirs = sampling.boundary_dirs(sc.n) if sc.n > 1 else 2
    return convexity_via_condition_C(sc.bound_set.V, sc.bound_set.center, n_dirs=n_dirs,
                                     tol=sampling.eps_strict, root_tol=sampling.root_tol,
                                     seed=sampling.seed).to_dict()


def dump_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_blowup_csv(sc: Scenario, path: str, count: int = 200) -> None:
    t = np.concatenate([np.linspace(0.0, 0.99, count), 1.0 - np.geomspace(1e-3, 1e-6, 16)])
    x, dx = blowup_solution(sc.blowup, t)
    lines = ["t,x,dx"] + [f"{a!r},{b!r},{c!r}" for a, b, c in zip(t.tolist(), x.tolist(), dx.tolist())]
    _write(path, "\n".join(lines) + "\n")


def cmd_verify(args) -> int:
    cfg = load_config(args)
    sc = build_from_config(cfg)
    doc, code = verify_document(sc, sampling_from_config(cfg), cfg)
    text = dump_json(doc)
    if args.out_dir:
        _write(os.path.join(args.out_dir, "report.json"), text)
        if sc.blowup is not None:
            write_blowup_csv(sc, os.path.join(args.out_dir, "blowup.csv"))
    else:
        sys.stdout.write(text)
    return code


def cmd_solve(args) -> int:
    cfg = load_config(args)
    sc = build_from_config(cfg)
    if not sc.solvable:
        raise UsageError(f"scenario {sc.name!r} is not a periodic solve target")
    vdoc, vcode = verify_document(sc, sampling_from_config(cfg), cfg)
    out = args.out_dir or "phibvp_out"
    os.makedirs(out, exist_ok=True)
    doc = {"schema": SCHEMA, "command": "solve", "scenario": sc.name, "config": cfg, "verify": vdoc}
    if vcode != EXIT_OK and not args.force:
        doc.update(status="verify_failed", exit_code=vcode)
        _write(os.path.join(out, "report.json"), dump_json(jsonable(doc)))
        print(f"verify phase did not pass (exit {vcode}); use --force to solve anyway", file=sys.stderr)
        return vcode
    solver = dict(cfg.get("solver", {}))
    unknown = set(solver) - {"N", "newton_tol", "lambda_steps", "min_step", "max_iter"}
    if unknown:
        raise UsageError(f"unknown solver keys: {sorted(unknown)}")
    steps = int(solver.get("lambda_steps", 11))
    if steps < 1:
        raise UsageError("lambda_steps must be positive")
    sched = np.linspace(0.0, 1.0, steps) if steps > 1 else np.array([1.0])
    try:
        res = continuation_solve(sc.family, sc.phi, sched, N=int(solver.get("N", 128)),
                                 newton_tol=float(solver.get("newton_tol", 1e-10)),
                                 min_step=float(solver.get("min_step", 1e-3)),
                                 max_iter=int(solver.get("max_iter", 50)),
                                 equilibrium_guess=sc.equilibrium_guess)
    except (ContinuationStalled, NoConvergence) as exc:
        last = getattr(exc, "last_lambda", None)
        doc.update(status="stalled", exit_code=EXIT_STALLED, error=str(exc), last_lambda=last)
        _write(os.path.join(out, "report.json"), dump_json(jsonable(doc)))
        if isinstance(exc, ContinuationStalled) and exc.trace:
            write_trace(exc.trace, os.path.join(out, "trace"))
        print(f"continuation stalled: {exc}", file=sys.stderr)
        return EXIT_STALLED
    sol = res.solution
    conclusion = sc.conclude(sol)
    write_solution_csv(sol, os.path.join(out, "solution.csv"))
    if args.trace:
        write_trace(res.trace, os.path.join(out, "trace"))
    ok = conclusion["contained"] and conclusion.get("nagumo_ok", True)
    code = EXIT_OK if ok else EXIT_VIOLATED
    doc.update(
        status="contained" if ok else "containment_violated", exit_code=code, conclusion=conclusion,
        solver={"N": sol.N, "lambda": sol.lam, "residual_norm": sol.residual_norm,
                "trace": [{"lambda": s.lam, "residual_norm": s.residual_norm, "iterations": s.iterations}
                          for s in res.trace]},
    )
    _write(os.path.join(out, "report.json"), dump_json(jsonable(doc)))
    return code


def _fmt_margin(m) -> str:
    if m is None:
        return "-"
    if isinstance(m, str):
        return m
    return f"{m + 0.0:.6g}"


def summarize(doc: dict) -> str:
    lines = []
    v = doc["verify"] if doc.get("command") == "solve" else doc
    lines.append(f"scenario: {doc.get('scenario')}   command: {doc.get('command')}   status: {doc.get('status')}")
    lines.append("")
    rows = [("condition", "verdict", "expected", "margin", "source")]
    for cid, c in sorted(v.get("conditions", {}).items()):
        rows.append((cid, c["verdict"], c.get("expected") or "-", _fmt_margin(c.get("margin")),
                     c.get("source", "")))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    for r in rows:
        lines.append("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip())
    if doc.get("command") == "solve" and "conclusion" in doc:
        c = doc["conclusion"]
        lines.append("")
        lines.append(f"solution: N={doc['solver']['N']} residual={_fmt_margin(doc['solver']['residual_norm'])} "
                     f"lambda={doc['solver']['lambda']}")
        for key in ("contained", "containment_margin", "max_abs_x", "max_dx", "K", "nagumo_ok",
                    "dx_L1", "K1", "R_star"):
            if key in c:
                lines.append(f"  {key}: {_fmt_margin(c[key]) if not isinstance(c[key], bool) else c[key]}")
    elif doc.get("command") == "solve":
        lines.append("")
        lines.append(f"solve: {doc.get('status')} {doc.get('error', '')}".rstrip())
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    parts = []
    for path in args.paths:
        p = os.path.join(path, "report.json") if os.path.isdir(path) else path
        try:
            with open(p) as fh:
                doc = json.load(fh)
        except OSError as exc:
            print(f"cannot read {p}: {exc}", file=sys.stderr)
            return EXIT_NOINPUT
        except json.JSONDecodeError as exc:
            print(f"corrupt report {p}: {exc}", file=sys.stderr)
            return EXIT_NOINPUT
        if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
            print(f"{p} is not a schema-{SCHEMA} report", file=sys.stderr)
            return EXIT_NOINPUT
        parts.append(summarize(doc))
    text = "\n".join(parts)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="phibvp", description="Hypothesis checks and periodic solutions for phi-Laplacian systems.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in (("verify", "check the hypotheses of a scenario"),
                           ("solve", "verify, then compute a periodic solution by continuation")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", "-c", help="JSON run configuration")
        p.add_argument("--scenario", "-s", help="built-in scenario name (overrides the config)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", "-o", default=None)
        if name == "solve":
            p.add_argument("--N", type=int, default=None, help="mesh size")
            p.add_argument("--force", action="store_true", help="solve even if verification fails")
            p.add_argument("--trace", action="store_true", help="write one CSV per lambda step")
    r = sub.add_parser("report", help="summarize report.json files")
    r.add_argument("paths", nargs="+")
    r.add_argument("--out", default=None)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    handler = {"verify": cmd_verify, "solve": cmd_solve, "report": cmd_report}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"phibvp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"phibvp: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except (BuildError, InputError) as exc:
        print(f"phibvp: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
