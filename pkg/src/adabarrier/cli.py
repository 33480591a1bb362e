"""Command-line harness: ``solve``, ``scaling`` and ``verify``.

Exit codes: 0 converged (or all checks passed), 1 a verification check failed,
2 iteration limit reached, 3 bad input, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .ahba import AhbaConfig, run_ahba
from .certification import analytic_center, restart_loop
from .checks import problem_suite
from .errors import InputError, NumericalError
from .model import ObjectiveModel, Potential
from .problems import PROBLEMS, ProblemBundle, make_problem
from .results import SolveOutput, Status, trace_to_csv
from .sahba import SahbaConfig, run_sahba

__all__ = [
    "RunConfig",
    "main",
    "start_point",
    "solve_bundle",
    "build_report",
    "scaling_runs",
    "fitted_exponent",
    "verify_bundle",
]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_MAXITER, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3, 4
ALGORITHMS = ("ahba", "sahba", "ahba_restart", "sahba_restart")
PROBLEM_KEYS = ("n", "seed", "negative_curvature_fraction", "alpha", "p", "lam", "m")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


@dataclass(frozen=True)
class RunConfig:
    algo: str
    problem: str
    eps: float = 1e-3
    estimate: float | None = None
    max_outer: int | None = None
    seed: int = 7
    n: int | None = None
    eps0: float | None = None
    problem_params: tuple = ()

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise InputError(f"unknown algorithm {self.algo!r}; choose one of {', '.join(ALGORITHMS)}")
        if not self.problem:
            raise InputError("a problem name is required")
        if not (self.eps > 0.0) or not math.isfinite(self.eps):
            raise InputError(f"eps must be positive, got {self.eps!r}")
        if self.estimate is not None and not (self.estimate >= 0.0):
            raise InputError("the initial smoothness estimate must be non-negative")
        if self.max_outer is not None and self.max_outer < 0:
            raise InputError("max_outer must be non-negative")
        if self.eps0 is not None and not (self.eps0 >= self.eps):
            raise InputError("eps0 must be at least eps")

    def bundle(self) -> ProblemBundle:
        params = dict(self.problem_params)
        params.setdefault("seed", self.seed)
        if self.n is not None:
            params["n"] = self.n
        return make_problem(self.problem, **params)


def start_point(bundle: ProblemBundle) -> np.ndarray:
    """Analytic center when the slice is bounded, else the bundle's own start."""
    if bundle.center_start:
        return analytic_center(bundle.barrier, bundle.constraint, bundle.x_start)
    return np.array(bundle.x_start, dtype=float)


def _configs(algo: str, eps: float, estimate, max_outer):
    base = algo.removesuffix("_restart")
    if base == "ahba":
        kw = {"eps": eps}
        if estimate is not None:
            kw["L0"] = estimate
        if max_outer is not None:
            kw["max_outer"] = max_outer
        return base, AhbaConfig(**kw)
    kw = {"eps": eps}
    if estimate is not None:
        kw["M0"] = estimate if estimate > 0 else 144.0 * eps
    if max_outer is not None:
        kw["max_outer"] = max_outer
    return base, SahbaConfig(**kw)


def solve_bundle(bundle: ProblemBundle, algo: str, eps: float, *, estimate=None, max_outer=None, eps0=None, x0=None) -> SolveOutput:
    """Run one of the four algorithm variants on a problem bundle."""
    if algo not in ALGORITHMS:
        raise InputError(f"unknown algorithm {algo!r}")
    base, cfg = _configs(algo, eps, estimate, max_outer)
    if x0 is None:
        x0 = start_point(bundle)
    c = bundle.constraint

    def pot_factory(mu):
        return Potential(bundle.objective, bundle.barrier, mu)

    if algo.endswith("_restart"):
        return restart_loop(base, pot_factory, c, x0, eps0 if eps0 is not None else max(1e-1, eps), eps, base_config=cfg)
    pot = pot_factory(cfg.resolved_mu(bundle.barrier.nu))
    if base == "ahba":
        return run_ahba(pot, c, x0, cfg)
    return run_sahba(pot, c, x0, cfg)


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _vec(a):
    return [_num(t) for t in np.asarray(a, dtype=float).ravel()]


def build_report(out: SolveOutput, problem: str = "", params: dict | None = None) -> dict:
    cert, so = out.certificate, out.second_order
    return {
        "algorithm": out.algorithm,
        "problem": problem,
        "params": params or {},
        "status": out.status.value,
        "reason": out.reason,
        "eps": _num(out.eps),
        "mu": _num(out.mu),
        "nu": _num(out.nu),
        "iterations": out.iterations,
        "inner_trials": out.inner_trials,
        "epochs": out.epochs,
        "vnorm_final": _num(out.vnorm_final),
        "threshold_final": _num(out.threshold_final),
        "L_final": _num(out.L_final),
        "L_max": _num(out.L_max),
        "L_last": _num(out.L_last),
        "F0": _num(out.F0),
        "f0": _num(out.f0),
        "f_final": _num(out.f_final),
        "x": _vec(out.x),
        "y": _vec(out.y),
        "s": _vec(out.s),
        "certificates": {
            "xi": _num(cert.xi) if cert else None,
            "eps_bound": _num(cert.eps_bound) if cert else None,
            "feasibility_residual": _num(cert.feasibility_residual) if cert else None,
            "eps2": _num(out.eps2),
            "min_eig": _num(so.min_eig) if so else None,
            "second_order_passed": so.passed if so else None,
        },
    }


def _exit_for(status: Status) -> int:
    return {Status.CONVERGED: EXIT_OK, Status.MAX_ITERATIONS: EXIT_MAXITER}.get(status, EXIT_NUMERIC)


def fitted_exponent(eps_list, outer) -> float:
    """Least-squares slope of ``log(outer)`` against ``log(1/eps)``; 0 for a single point."""
    if len(eps_list) < 2:
        return 0.0
    xs = np.log(1.0 / np.asarray(eps_list, dtype=float))
    ys = np.log(np.maximum(np.asarray(outer, dtype=float), 1.0))
    return float(np.polyfit(xs, ys, 1)[0])


def scaling_runs(bundle: ProblemBundle, algo: str, eps_list, *, estimate=None, max_outer=None):
    """One solve per tolerance from a shared start point. Returns ``(outputs, exponent)``."""
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InputError("eps list must be non-empty and strictly decreasing")
    x0 = start_point(bundle)
    outs = [solve_bundle(bundle, algo, e, estimate=estimate, max_outer=max_outer, x0=x0) for e in eps_list]
    return outs, fitted_exponent(eps_list, [o.iterations for o in outs])


def verify_bundle(bundle: ProblemBundle, samples: int = 20, seed: int = 0):
    return problem_suite(bundle, samples=samples, seed=seed)


def _scaled_gradient(bundle: ProblemBundle, factor: float) -> ProblemBundle:
    obj = bundle.objective
    grad = obj.gradient
    bad = ObjectiveModel(obj.dimension, obj.value, lambda x: factor * grad(x), obj.hessian, obj.smooth_on_boundary)
    return replace(bundle, objective=bad)


def _parse_params(items) -> tuple:
    out = []
    for item in items or ():
        if "=" not in item:
            raise InputError(f"problem parameter {item!r} must look like KEY=VALUE")
        k, v = item.split("=", 1)
        try:
            val = int(v)
        except ValueError:
            try:
                val = float(v)
            except ValueError as exc:
                raise InputError(f"problem parameter {k!r} must be numeric") from exc
        out.append((k.strip(), val))
    return tuple(out)


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("config file must hold a JSON object")
    return data


def _merged(args, keys) -> dict:
    """Config file values overridden by any flag given on the command line."""
    cfg = _load_config(getattr(args, "config", None))
    unknown = set(cfg) - set(keys) - {"param"}
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged = dict(cfg)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    params = dict(_parse_params(cfg.get("param")))
    params.update(_parse_params(getattr(args, "param", None)))
    merged["param"] = params
    return merged


def _add_common(p):
    p.add_argument("--config", help="JSON file with the same keys as the flags; flags win")
    p.add_argument("--algo", choices=ALGORITHMS)
    p.add_argument("--problem")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--estimate", type=float, help="initial L0 (first-order) or M0 (second-order)")
    p.add_argument("--max-outer", dest="max_outer", type=int)
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="extra problem parameter")


def _parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adabarrier", description="Adaptive barrier methods for linearly constrained non-convex problems.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one problem and write a trace and a report")
    _add_common(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--eps0", type=float, help="starting tolerance for the restart variants")
    p.add_argument("--trace", help="trace CSV path (default trace.csv)")
    p.add_argument("--report", help="report JSON path (default report.json)")

    p = sub.add_parser("scaling", help="iteration counts over a decreasing list of tolerances")
    _add_common(p)
    p.add_argument("--eps-list", dest="eps_list", help="comma-separated, strictly decreasing")
    p.add_argument("--out", help="table CSV path (default scaling.csv)")

    p = sub.add_parser("verify", help="run the numerical check suites for a problem")
    p.add_argument("--problem")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--gradient-scale", dest="gradient_scale", type=float, default=1.0,
                   help="multiply the objective gradient (to confirm the checks catch errors)")
    return parser


SOLVE_KEYS = ("algo", "problem", "n", "seed", "estimate", "max_outer", "eps", "eps0", "trace", "report")
SCALING_KEYS = ("algo", "problem", "n", "seed", "estimate", "max_outer", "eps_list", "out")


def _run_config(m: dict, eps: float) -> RunConfig:
    if not m.get("problem"):
        raise InputError("missing problem name (--problem); choose one of " + ", ".join(sorted(PROBLEMS)))
    if not m.get("algo"):
        raise InputError("missing algorithm (--algo)")
    return RunConfig(
        algo=m["algo"], problem=m["problem"], eps=eps, estimate=m.get("estimate"),
        max_outer=m.get("max_outer"), seed=int(m.get("seed", 7)), n=m.get("n"),
        eps0=m.get("eps0"), problem_params=tuple(sorted(m["param"].items())),
    )


def _cmd_solve(args) -> int:
    m = _merged(args, SOLVE_KEYS)
    rc = _run_config(m, float(m.get("eps", 1e-3)))
    bundle = rc.bundle()
    out = solve_bundle(bundle, rc.algo, rc.eps, estimate=rc.estimate, max_outer=rc.max_outer, eps0=rc.eps0)
    trace_path = Path(m.get("trace") or "trace.csv")
    report_path = Path(m.get("report") or "report.json")
    trace_path.write_text(trace_to_csv(out.trace))
    report = build_report(out, rc.problem, dict(bundle.params))
    report_path.write_text(json.dumps(report, indent=2) + "\n")
    print(
        f"{out.algorithm} on {rc.problem}: {out.status.value} after {out.iterations} iterations "
        f"({out.inner_trials} trials), f={out.f_final:.10g}"
        + (f" [{out.reason}]" if out.reason else "")
    )
    return _exit_for(out.status)


def _cmd_scaling(args) -> int:
    m = _merged(args, SCALING_KEYS)
    raw = m.get("eps_list") or "1e-1,1e-2,1e-3"
    try:
        eps_list = [float(t) for t in (raw.split(",") if isinstance(raw, str) else raw)]
    except ValueError as exc:
        raise InputError(f"bad eps list {raw!r}") from exc
    if not eps_list or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InputError("eps list must be non-empty and strictly decreasing")
    rc = _run_config(m, eps_list[-1])
    bundle = rc.bundle()
    x0 = start_point(bundle)
    out_path = Path(m.get("out") or "scaling.csv")
    rows, code = [], EXIT_OK
    for e in eps_list:
        try:
            o = solve_bundle(bundle, rc.algo, e, estimate=rc.estimate, max_outer=rc.max_outer, x0=x0)
        except NumericalError as exc:
            print(f"error: run at eps={e:g} failed: {exc}", file=sys.stderr)
            code = EXIT_NUMERIC
            break
        rows.append((e, o.iterations, o.inner_trials))
        if o.status is not Status.CONVERGED:
            code = max(code, _exit_for(o.status))
    slope = fitted_exponent([r[0] for r in rows], [r[1] for r in rows])
    lines = ["eps,outer,inner,fitted_exponent"]
    lines += [f"{e:.17g},{k},{n},{slope:.17g}" for e, k, n in rows]
    out_path.write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return code


def _cmd_verify(args) -> int:
    if not args.problem:
        raise InputError("missing problem name (--problem); choose one of " + ", ".join(sorted(PROBLEMS)))
    params = dict(_parse_params(args.param))
    if args.n is not None:
        params["n"] = args.n
    if args.seed is not None:
        params["seed"] = args.seed
    bundle = make_problem(args.problem, **params)
    if args.gradient_scale != 1.0:
        bundle = _scaled_gradient(bundle, args.gradient_scale)
    results = verify_bundle(bundle, samples=args.samples)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else "some checks failed")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required (solve, scaling, verify)", file=sys.stderr)
        return EXIT_INPUT
    handler = {"solve": _cmd_solve, "scaling": _cmd_scaling, "verify": _cmd_verify}[args.command]
    try:
        return handler(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
