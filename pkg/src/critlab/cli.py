"""Command-line entry point.

Exit codes: 0 pass, 1 usage error, 2 invariant violation, 3 verification
failure.  Every subcommand accepts ``--config FILE`` with flat ``key=value``
lines (``#`` starts a comment); flags given on the command line win.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bounds, harness, oracles, walks
from .errors import InvariantViolation, ParameterError, VerificationFailure
from .models import ErParams, IntersectionParams, QuantumParams, RegParams
from .models.regular import config_checks

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_FAIL = 0, 1, 2, 3
MODELS = ("er", "regular", "intersection", "quantum")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ------------------------------------------------------------ config files

def read_config(path) -> dict:
    """Flat key=value file; blank lines and # comments ignored."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _dest_map(parser) -> dict:
    m = {}
    for act in parser._actions:
        if act.dest in ("help", "config", "save_config"):
            continue
        m[act.dest] = act
        for opt in act.option_strings:
            m.setdefault(opt.lstrip("-").replace("-", "_"), act)
    return m


def _apply_config(parser, args, cfg: dict) -> None:
    dests = _dest_map(parser)
    for key, value in cfg.items():
        act = dests.get(key)
        if act is None:
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, act.dest) is not None and getattr(args, act.dest) is not False:
            continue
        if act.nargs == 0:
            val = value.lower() in ("1", "true", "yes", "on")
        else:
            try:
                val = act.type(value) if act.type else value
            except (TypeError, ValueError):
                raise UsageError(f"bad value for {key}: {value!r}") from None
            if act.choices and val not in act.choices:
                raise UsageError(f"{key} must be one of {list(act.choices)}")
        setattr(args, act.dest, val)


def write_config(parser, args, path) -> None:
    lines = []
    for dest, act in _dest_map(parser).items():
        if dest != act.dest:
            continue
        val = getattr(args, dest, None)
        if val is None or val is False:
            continue
        name = act.option_strings[0].lstrip("-") if act.option_strings else dest
        lines.append(f"{name}={'true' if val is True else val}")
    Path(path).write_text("\n".join(lines) + "\n")


# ------------------------------------------------------------ argument helpers

def _grid(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty grid")
    return vals


def _prob(text: str) -> float:
    return float(Fraction(text))


def _add_model_flags(sp, replicates=True):
    sp.add_argument("--model", choices=MODELS)
    sp.add_argument("--n", type=int, help="number of vertices (circles for quantum)")
    sp.add_argument("--d", type=int, help="degree (regular)")
    sp.add_argument("--beta", type=float, help="m/n (intersection) or circle length (quantum)")
    sp.add_argument("--lambda", dest="lam", type=float, help="link-rate parameter (quantum)")
    sp.add_argument("--p", type=_prob, help="edge probability; default is the critical value")
    sp.add_argument("--m", type=int, help="number of attributes (intersection)")
    sp.add_argument("--base", choices=("config", "simple", "circulant"),
                    help="regular base graph (default config)")
    if replicates:
        sp.add_argument("--replicates", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int,
                        help="worker threads (default: CRITLAB_THREADS or 1)")


def _add_io_flags(sp, fmt=True):
    sp.add_argument("--out", help="output path")
    if fmt:
        sp.add_argument("--format", choices=("csv", "json"))
    sp.add_argument("--config", help="key=value file of defaults")
    sp.add_argument("--save-config", help="write the resolved options to this file and go on")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="critlab", description="Critical random graph experiments.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("simulate", help="sample |C_max| and write one row per replicate")
    _add_model_flags(sp)
    _add_io_flags(sp)

    sp = sub.add_parser("sweep", help="tail frequencies over an A grid")
    _add_model_flags(sp)
    sp.add_argument("--a-grid", type=_grid, help="comma-separated A values (default 2,4,8)")
    sp.add_argument("--direction", choices=("lower", "upper", "both"))
    _add_io_flags(sp)

    sp = sub.add_parser("verify-bounds", help="walk-bound domination and critical-curve checks")
    _add_model_flags(sp, replicates=False)
    sp.add_argument("--A", type=float, help="grid point for the lower-tail constants (default 2)")
    sp.add_argument("--K", type=int, help="largest k for the survival-bound check (default 10000)")
    _add_io_flags(sp, fmt=False)

    sp = sub.add_parser("check-conditions", help="grid check of the lower-tail hypotheses")
    _add_model_flags(sp, replicates=False)
    sp.add_argument("--A", type=float, help="grid point (default 2)")
    sp.add_argument("--instrumented", type=int,
                    help="regular only: also run this many instrumented config explorations")
    sp.add_argument("--seed", type=int)
    _add_io_flags(sp, fmt=False)

    sp = sub.add_parser("oracle", help="compare a simulated |C_max| pmf with exact enumeration")
    _add_model_flags(sp)
    sp.add_argument("--tv-threshold", type=float, help="largest accepted TV distance (default 0.01)")
    sp.add_argument("--no-holes", action="store_true", help="quantum: reduce to G(n, p)")
    _add_io_flags(sp, fmt=False)

    sp = sub.add_parser("walk", help="ballot estimate, survival DP and simulation")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--ballot", action="store_true", help="exhaustive ballot check up to n steps")
    mode.add_argument("--dp", action="store_true", help="exact survival probability")
    mode.add_argument("--simulate", action="store_true", help="Monte Carlo survival probability")
    sp.add_argument("--law", help="pm1, bin:N:q or poisson:mu (default bin:2:1/2)")
    sp.add_argument("--n", type=int, help="number of steps (ballot)")
    sp.add_argument("--a", type=float, help="barrier (ballot, default 0)")
    sp.add_argument("--r", type=int, help="start (default 1)")
    sp.add_argument("--k", type=int, help="horizon (dp, simulate)")
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--seed", type=int)
    _add_io_flags(sp, fmt=False)
    return ap


# ------------------------------------------------------------ model construction

def _model_params(args):
    if args.model is None:
        raise UsageError("--model is required")
    if args.n is None:
        raise UsageError("--n is required")
    kind = args.model
    if kind != "regular" and (args.d is not None or args.base is not None):
        raise UsageError("--d/--base apply to the regular model only")
    if kind != "intersection" and args.m is not None:
        raise UsageError("--m applies to the intersection model only")
    if kind not in ("intersection", "quantum") and args.beta is not None:
        raise UsageError("--beta applies to the intersection and quantum models only")
    if kind != "quantum" and args.lam is not None:
        raise UsageError("--lambda applies to the quantum model only")
    if kind == "er":
        params = ErParams(args.n, args.p)
    elif kind == "regular":
        if args.d is None:
            raise UsageError("the regular model needs --d")
        params = RegParams(args.n, args.d, args.p, args.base or "config")
    elif kind == "intersection":
        params = IntersectionParams(args.n, 1.0 if args.beta is None else args.beta, args.m, args.p)
    else:
        if args.p is not None:
            raise UsageError("--p does not apply to the quantum model")
        params = QuantumParams(args.n, args.beta, 1.0 if args.lam is None else args.lam)
    return params


def _is_critical(params) -> bool:
    if isinstance(params, ErParams):
        return math.isclose(params.p, 1.0 / params.n, rel_tol=1e-12)
    if isinstance(params, RegParams):
        return math.isclose(params.p, 1.0 / (params.d - 1), rel_tol=1e-12)
    if isinstance(params, IntersectionParams):
        return math.isclose(params.p, 1.0 / math.sqrt(params.n * params.m), rel_tol=1e-12)
    return abs(bounds.F_eval(params.beta, params.lam) - 1.0) < 1e-9


def _describe(params) -> str:
    fields = ", ".join(f"{k}={getattr(params, k)}" for k in params.__dataclass_fields__
                       if k != "kind")
    tag = "" if _is_critical(params) else " [non-critical]"
    return f"{params.kind}({fields}){tag}"


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        return args.threads
    return harness.default_threads()


def _need(args, name, default=None):
    val = getattr(args, name)
    if val is None:
        if default is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")
        return default
    return val


def _emit_json(args, payload: dict) -> None:
    text = json.dumps(payload, indent=1, default=_json_default) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


# ------------------------------------------------------------ subcommands

def cmd_simulate(args) -> int:
    params = _model_params(args)
    reps = _need(args, "replicates")
    seed = _need(args, "seed", 0)
    fmt = args.format or "csv"
    out = args.out or f"samples.{fmt}"
    cfg = harness.ExperimentConfig(params, reps, seed, threads=_threads(args))
    t0 = time.perf_counter()
    s = harness.run_replicates(cfg)
    dt = time.perf_counter() - t0
    harness.export(harness.samples_rows(s), harness.SAMPLES_HEADER, out, fmt)
    print(_describe(params))
    print(f"replicates={reps} median_cmax={float(np.median(s.cmax)):g} max_cmax={int(s.cmax.max())} "
          f"runtime={dt:.2f}s")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = _model_params(args)
    reps = _need(args, "replicates")
    seed = _need(args, "seed", 0)
    grid = args.a_grid or [2.0, 4.0, 8.0]
    direction = args.direction or "lower"
    fmt = args.format or "csv"
    out = args.out or f"tails.{fmt}"
    cfg = harness.ExperimentConfig(params, reps, seed, A_grid=grid, threads=_threads(args))
    s = harness.run_replicates(cfg)
    dirs = ("lower", "upper") if direction == "both" else (direction,)
    rows = []
    print(_describe(params))
    for d in dirs:
        ests = harness.tail_estimates(s, params.n, grid, d, params=params)
        rows.extend(ests)
        for e in ests:
            bound = "-" if e.theorem_bound is None else f"{e.theorem_bound:.4g}"
            flag = " vacuous" if e.vacuous else ""
            print(f"{d:5s} A={e.A:g} threshold={e.threshold} p_hat={e.p_hat:.5g} "
                  f"[{e.ci_lo:.5g}, {e.ci_hi:.5g}] bound={bound}{flag}")
        if len(ests) >= 2:
            rep = harness.decay_check(ests)
            status = "inconclusive" if rep.inconclusive else ("pass" if rep.passed else "fail")
            print(f"{d} decay check (gamma={rep.gamma:g}): {status}")
    harness.export(harness.tails_rows(rows), harness.TAILS_HEADER, out, fmt)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    params = _model_params(args)
    A = args.A if args.A is not None else 2.0
    K = args.K if args.K is not None else 10_000
    report: dict = {"model": _describe(params)}
    ok = True
    try:
        spec = bounds.lower_tail_spec(params, A=A)
        report["lower_tail_spec"] = {k: getattr(spec, k) for k in spec.__dataclass_fields__
                                     if k != "extra"}
        report["spec_issues"] = spec.issues()
        print(f"lower-tail constants at A={A:g}: h={spec.h:.4g} N1={spec.N1} N2={spec.N2}")
        for issue in spec.issues():
            print(f"  note: {issue}")
    except ParameterError as exc:
        report["spec_issues"] = [str(exc)]
        print(f"  note: {exc}")
    if isinstance(params, QuantumParams):
        resid = abs(bounds.F_eval(params.beta, params.lam) - 1.0)
        report["critical_residual"] = resid
        good = resid < 1e-10
        ok &= good
        print(f"|F(beta, lambda) - 1| = {resid:.3g}: {'pass' if good else 'fail'}")
        thr = bounds.upper_threshold(params.n, A)
        dec = bounds.quantum_upper_decomposition(params.n, params.theta, params.lam,
                                                 max(1, thr // 2))
        report["upper_decomposition"] = dec._asdict()
        print(f"upper-tail bound at A={A:g}: main={dec.main:.4g} error={dec.error:.4g} "
              f"total={dec.total:.4g}")
    else:
        const = bounds.upper_tail_constant(params)
        report["upper_tail_constant"] = const.computed
        report["upper_tail_constant_printed"] = const.printed
        print(f"upper-tail constant c* = {const.computed:.5g}"
              + ("" if const.printed is None else f" (quoted {const.printed:.5g})"))
        bad = walks.domination_violations(const.law, 1, K)
        report["domination_violations"] = len(bad)
        ok &= not bad
        print(f"survival-bound domination for k in [1, {K}]: {len(bad)} violations")
    report["passed"] = ok
    _emit_json(args, report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_conditions(args) -> int:
    params = _model_params(args)
    A = args.A if args.A is not None else 2.0
    rep = bounds.check_conditions(params, A=A)
    print(f"{_describe(params)}: {rep.grid}, {rep.checked} states")
    print(f"{len(rep.violations)} violations")
    for v in rep.violations[:20]:
        print(f"  t={v.t} R={v.R} {v.quantity}: {v.value:.6g} vs {v.bound:.6g}")
    for note in rep.notes:
        print(f"  note: {note}")
    payload = {"model": rep.model, "grid": rep.grid, "checked": rep.checked,
               "violations": [v._asdict() for v in rep.violations], "notes": rep.notes}
    ok = rep.passed
    if args.instrumented:
        if not isinstance(params, RegParams):
            raise UsageError("--instrumented applies to the regular model only")
        checks = config_checks(params, _need(args, "seed", 0), args.instrumented)
        payload["instrumented"] = checks.counts
        breaches = {k: v for k, v in checks.counts.items() if k.endswith("breach")}
        print("instrumented runs: " + ", ".join(f"{k}={v}" for k, v in breaches.items()))
        ok &= breaches["eta1_breach"] == 0 and breaches["eta2_breach"] == 0
    payload["passed"] = ok
    _emit_json(args, payload)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_oracle(args) -> int:
    params = _model_params(args)
    reps = args.replicates if args.replicates is not None else 100_000
    seed = _need(args, "seed", 0)
    thr = args.tv_threshold if args.tv_threshold is not None else 0.01
    p_text = None
    if isinstance(params, ErParams):
        exact = oracles.er_exact(params.n, Fraction(params.p) if args.p is None else params.p)
    elif isinstance(params, RegParams):
        if params.base == "circulant":
            raise UsageError("no enumeration oracle for the circulant base")
        exact = oracles.config_exact(params.n, params.d, params.p,
                                     simple=params.base == "simple")
    elif isinstance(params, IntersectionParams):
        exact = oracles.intersection_exact(params.n, params.m, params.p)
    else:
        if not args.no_holes:
            raise UsageError("the quantum oracle needs --no-holes")
        p_q = -math.expm1(-params.theta / (params.lam * params.n))
        p_text = p_q
        exact = oracles.er_exact(params.n, p_q)
    cfg = harness.ExperimentConfig(params, reps, seed, threads=_threads(args))
    s = harness.run_replicates(cfg, holes=not args.no_holes)
    emp = oracles.empirical_pmf(s.cmax)
    tv = oracles.tv_distance(exact, emp)
    ok = tv < thr
    print(_describe(params))
    print(f"{exact.descriptor}: TV = {tv:.6f} over {reps} replicates "
          f"(threshold {thr:g}): {'pass' if ok else 'fail'}")
    payload = {"model": params.kind, "exact": exact.as_floats(), "empirical": emp, "tv": tv,
               "threshold": thr, "replicates": reps, "passed": ok}
    if p_text is not None:
        payload["matched_p"] = p_text
    _emit_json(args, payload)
    return EXIT_OK if ok else EXIT_FAIL


def parse_law(text: str) -> walks.IncrementLaw:
    text = (text or "bin:2:1/2").strip()
    if text == "pm1":
        half = Fraction(1, 2)
        return walks.IncrementLaw.from_pairs([(0, half), (2, half)], label="fair +-1")
    parts = text.split(":")
    try:
        if parts[0] == "bin" and len(parts) == 3:
            q = Fraction(parts[2])
            return walks.binomial_law(int(parts[1]), q)
        if parts[0] == "poisson" and len(parts) == 2:
            return walks.poisson_law(float(parts[1]))
    except (ValueError, ZeroDivisionError):
        pass
    raise UsageError(f"unknown law {text!r}; use pm1, bin:N:q or poisson:mu")


def cmd_walk(args) -> int:
    law = parse_law(args.law)
    r = args.r if args.r is not None else 1
    if args.ballot:
        n = _need(args, "n")
        a = args.a if args.a is not None else 0.0
        rep = walks.ballot_check(law, r, a, n)
        for j, lhs, rhs, ratio in rep.rows:
            mark = "ok" if (j, lhs, rhs) not in rep.violations else "FAIL"
            print(f"j={j}: lhs={float(lhs):.6g} rhs={float(rhs):.6g} {mark}")
        print("all j pass" if rep.passed else f"{len(rep.violations)} j values fail")
        payload = {"law": law.label, "r": r, "a": a, "n": n, "passed": rep.passed,
                   "rows": [[j, str(l), str(rh)] for j, l, rh, _ in rep.rows]}
        _emit_json(args, payload)
        return EXIT_OK if rep.passed else EXIT_FAIL
    k = _need(args, "k")
    if args.simulate:
        reps = args.replicates if args.replicates is not None else 100_000
        est = walks.simulate_survival(law, r, k, reps, _need(args, "seed", 0))
        print(f"P(r + S_t > 0, t <= {k}) ~ {est.p_hat:.6g} [{est.ci_lo:.6g}, {est.ci_hi:.6g}]")
        _emit_json(args, {"law": law.label, "r": r, "k": k, **est.as_dict()})
        return EXIT_OK
    val = walks.positivity_prob_dp(law, r, k, exact=law.exact)
    print(f"P(r + S_t > 0, t <= {k}) = {val}")
    _emit_json(args, {"law": law.label, "r": r, "k": k, "prob": str(val)})
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "verify-bounds": cmd_verify_bounds,
            "check-conditions": cmd_check_conditions, "oracle": cmd_oracle, "walk": cmd_walk}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.command is None:
            ap.print_help()
            return EXIT_USAGE
        sub = ap._subparsers._group_actions[0].choices[args.command]
        if args.config:
            _apply_config(sub, args, read_config(args.config))
        if args.save_config:
            write_config(sub, args, args.save_config)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        extra = f" (state dumped to {exc.dump})" if exc.dump else ""
        print(f"invariant violation: {exc}{extra}", file=sys.stderr)
        return EXIT_INVARIANT
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
