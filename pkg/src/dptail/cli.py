"""Command-line front end: ``dptail {bound,kinf,validate,sweep,check}``.

Output is line-delimited JSON (default) or CSV. Floats are written with 17
significant digits and infinities as the strings "inf" / "-inf", so every
number round-trips exactly.
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from ._validation import DomainError
from .beta_bounds import (
    BetaParams,
    PerturbationRule,
    bernstein_bound,
    hoeffding_bound,
    kl_bound,
    perturbed_kl_bound_general,
    perturbed_kl_bound_table1,
)
from .dirichlet_bounds import (
    DirichletParams,
    beyond_unit_bound,
    chernoff_kinf_bound,
    two_value_log_tail,
    unit_mass_perturbed_bound,
)
from .kinf import FiniteSupport, kinf_bruteforce, kinf_variational
from .montecarlo import DEFAULT_CONFIDENCE, estimate_tail
from .special import log_beta_tail
from .suites import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

BETA_KINDS = ("hoeffding", "bernstein", "kl", "perturbed-table1", "perturbed-general")
DIRICHLET_KINDS = ("chernoff", "unit-mass", "beyond-unit")
# slack when comparing a bound with an exact log-tail
EXACT_SLACK = 1e-9


# --- serialization ------------------------------------------------------------------


def format_number(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def to_json(obj):
    """JSON text with 17-digit floats; non-finite floats become strings."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        text = format_number(obj)
        return text if math.isfinite(obj) else json.dumps(text)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    return json.dumps(str(obj))


class RecordWriter:
    """Writes records as JSON lines or as CSV rows with a fixed header."""

    def __init__(self, stream, fmt, columns=None):
        self.stream = stream
        self.fmt = fmt
        self.columns = columns
        self._csv = None

    def write(self, record):
        if self.fmt == "json":
            self.stream.write(to_json(record) + "\n")
            return
        if self._csv is None:
            self.columns = self.columns or list(record)
            self._csv = csv.writer(self.stream, lineterminator="\n")
            self._csv.writerow(self.columns)
        self._csv.writerow([_csv_cell(record.get(c)) for c in self.columns])


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (dict, list, tuple)):
        return to_json(v)
    return format_number(v)


# --- argument parsing -------------------------------------------------------------------


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text):
    try:
        lo, hi, steps = text.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:steps, got {text!r}") from None
    if steps < 1:
        raise argparse.ArgumentTypeError("steps must be >= 1")
    return [lo] if steps == 1 else np.linspace(lo, hi, steps).tolist()


def _rule(text):
    try:
        return PerturbationRule.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_problem(p):
    g = p.add_argument_group("problem")
    g.add_argument("--beta", type=_floats, metavar="A,B", help="Beta(a, b) problem")
    g.add_argument("--dirichlet", type=float, metavar="ALPHA", help="Dirichlet scale alpha")
    g.add_argument("--base", type=_floats, metavar="W1,...,WD", help="base weights nu0")
    g.add_argument("--payoffs", type=_floats, metavar="F1,...,FD", help="payoff per atom")
    g.add_argument("--u", type=float, help="threshold")
    g.add_argument("--u-grid", type=_grid, metavar="LO:HI:STEPS", help="evenly spaced thresholds")
    g.add_argument("--kinds", default="all", help="comma-separated bound kinds or 'all'")
    g.add_argument("--rule", type=_rule, default=PerturbationRule("sinf"), help="s0|s1|s2|sinf|eta=VALUE")


def _add_mc(p):
    g = p.add_argument_group("Monte Carlo")
    g.add_argument("--n", type=lambda s: int(float(s)), default=1_000_000, help="samples per estimate")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--confidence", type=float, default=DEFAULT_CONFIDENCE)
    g.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")


def build_parser():
    parser = argparse.ArgumentParser(prog="dptail", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dptail {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--output", help="write here instead of standard output")

    p = sub.add_parser("bound", help="compute tail bounds")
    _add_problem(p)
    common(p)

    p = sub.add_parser("kinf", help="solve K_inf on a finite support")
    p.add_argument("--weights", type=_floats, required=True)
    p.add_argument("--payoffs", type=_floats, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--oracle", action="store_true", help="also run the brute-force oracle (d <= 4)")
    common(p)

    p = sub.add_parser("validate", help="compare bounds with exact tails or Monte Carlo")
    _add_problem(p)
    _add_mc(p)
    common(p)

    p = sub.add_parser(
        "sweep",
        help="tabulate every bound over a grid",
        epilog=(
            "Columns: the grid variable (u or alpha), then for each kind in the order "
            "given by --kinds '<kind>' and '<kind>_valid', then the reference columns "
            "'exact_log_tail' (Beta or two-valued payoffs) or 'mc_p_hat', 'mc_ci_low', 'mc_ci_high', 'mc_hits'."
        ),
    )
    _add_problem(p)
    p.add_argument("--alpha-grid", type=_grid, metavar="LO:HI:STEPS", help="sweep alpha at fixed --u")
    _add_mc(p)
    common(p)

    p = sub.add_parser("check", help="run a property suite")
    p.add_argument("--suite", required=True, choices=(*SUITES, "all"))
    _add_mc(p)
    common(p)
    return parser


class UsageError(Exception):
    pass


def _problem(args):
    if args.beta is not None:
        if args.dirichlet is not None or args.base is not None or args.payoffs is not None:
            raise UsageError("--beta cannot be combined with --dirichlet/--base/--payoffs")
        if len(args.beta) != 2:
            raise UsageError("--beta needs exactly two numbers a,b")
        return BetaParams(*args.beta)
    if args.dirichlet is None or args.base is None or args.payoffs is None:
        raise UsageError("give either --beta a,b or --dirichlet alpha --base ... --payoffs ...")
    return DirichletParams.from_lists(args.dirichlet, args.base, args.payoffs)


def _problem_echo(prob):
    if isinstance(prob, BetaParams):
        return {"beta": [prob.a, prob.b]}
    return {"alpha": prob.alpha, "base": prob.base.weights.tolist(), "payoffs": prob.base.payoffs.tolist()}


def _kinds(args, prob):
    allowed = BETA_KINDS if isinstance(prob, BetaParams) else DIRICHLET_KINDS
    if args.kinds == "all":
        return list(allowed)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    bad = [k for k in kinds if k not in allowed]
    if bad or not kinds:
        raise UsageError(f"unknown kinds {bad} for this problem; choose from {', '.join(allowed)}")
    return kinds


def _thresholds(args):
    if args.u is not None and args.u_grid is not None:
        raise UsageError("give --u or --u-grid, not both")
    if args.u is not None:
        return [args.u]
    if args.u_grid is not None:
        return args.u_grid
    raise UsageError("a threshold is required: --u or --u-grid")


def compute_bound(prob, kind, u, rule):
    if isinstance(prob, BetaParams):
        return {
            "hoeffding": lambda: hoeffding_bound(prob, u),
            "bernstein": lambda: bernstein_bound(prob, u),
            "kl": lambda: kl_bound(prob, u),
            "perturbed-table1": lambda: perturbed_kl_bound_table1(prob, u),
            "perturbed-general": lambda: perturbed_kl_bound_general(prob, u, rule),
        }[kind]()
    return {
        "chernoff": lambda: chernoff_kinf_bound(prob, u),
        "unit-mass": lambda: unit_mass_perturbed_bound(prob, u),
        "beyond-unit": lambda: beyond_unit_bound(prob, u, rule),
    }[kind]()


def exact_log_tail(prob, u):
    """Exact ln P(tail) when a closed form exists, else None."""
    if isinstance(prob, BetaParams):
        if not 0.0 <= u <= 1.0:
            raise DomainError(f"u must lie in [0, 1], got {u!r}")
        return log_beta_tail(prob.a, prob.b, u)
    return two_value_log_tail(prob, u)


def _report_record(command, echo, rep):
    return {
        "version": __version__,
        "command": command,
        "input": echo,
        "kind": rep.kind.value,
        "log_bound": rep.log_bound,
        "valid": rep.valid,
        "eta_used": rep.eta_used,
        "detail": rep.detail,
    }


def cmd_bound(args, out):
    prob = _problem(args)
    kinds = _kinds(args, prob)
    writer = RecordWriter(out, args.format, ["version", "command", "input", "kind", "log_bound", "valid", "eta_used", "detail"])
    for u in _thresholds(args):
        echo = {**_problem_echo(prob), "u": u, "rule": str(args.rule)}
        for kind in kinds:
            writer.write(_report_record("bound", echo, compute_bound(prob, kind, u, args.rule)))
        exact = exact_log_tail(prob, u)
        if exact is not None:
            writer.write({"version": __version__, "command": "bound", "input": echo, "kind": "exact",
                          "log_bound": exact, "valid": True, "eta_used": None, "detail": {}})
    return EXIT_OK


def cmd_kinf(args, out):
    nu = FiniteSupport(np.asarray(args.weights, float), np.asarray(args.payoffs, float))
    sol = kinf_variational(nu, args.u)
    echo = {"weights": nu.weights.tolist(), "payoffs": nu.payoffs.tolist(), "u": args.u}
    cols = ["version", "command", "input", "method", "value", "lambda_star", "dual_slack", "at_boundary", "extended"]
    writer = RecordWriter(out, args.format, cols)
    writer.write({"version": __version__, "command": "kinf", "input": echo, "method": "variational",
                  "value": sol.value, "lambda_star": sol.lambda_star, "dual_slack": sol.dual_slack,
                  "at_boundary": sol.at_boundary, "extended": sol.extended})
    if args.oracle:
        if nu.d > 4:
            raise UsageError("--oracle supports at most 4 atoms")
        writer.write({"version": __version__, "command": "kinf", "input": echo, "method": "bruteforce",
                      "value": kinf_bruteforce(nu, args.u)})
    return EXIT_OK


def _reference(prob, u, args, stream):
    exact = exact_log_tail(prob, u)
    if exact is not None:
        return {"exact_log_tail": exact}, None
    est = estimate_tail(prob, u, n=args.n, seed=args.seed, confidence=args.confidence,
                        stream=stream, workers=args.workers)
    return {"mc_p_hat": est.p_hat, "mc_ci_low": est.ci_low, "mc_ci_high": est.ci_high, "mc_hits": est.n_hits}, est


def _verdict(rep, ref, est):
    if not rep.valid or math.isnan(rep.log_bound):
        return "pass"
    if est is None:
        return "pass" if rep.log_bound >= ref["exact_log_tail"] - EXACT_SLACK else "fail"
    if est.n_hits == 0:
        return "inconclusive"
    return "pass" if math.exp(rep.log_bound) >= est.ci_low else "fail"


def cmd_validate(args, out):
    prob = _problem(args)
    kinds = _kinds(args, prob)
    writer = RecordWriter(out, args.format, ["version", "command", "input", "kind", "log_bound", "valid", "verdict", "reference"])
    failed = False
    for i, u in enumerate(_thresholds(args)):
        echo = {**_problem_echo(prob), "u": u, "rule": str(args.rule), "n": args.n, "seed": args.seed,
                "confidence": args.confidence}
        ref, est = _reference(prob, u, args, i)
        for kind in kinds:
            rep = compute_bound(prob, kind, u, args.rule)
            verdict = _verdict(rep, ref, est)
            failed |= verdict == "fail"
            writer.write({"version": __version__, "command": "validate", "input": echo, "kind": kind,
                          "log_bound": rep.log_bound, "valid": rep.valid, "verdict": verdict, "reference": ref})
    return EXIT_FAIL if failed else EXIT_OK


def cmd_sweep(args, out):
    prob = _problem(args)
    kinds = _kinds(args, prob)
    if args.alpha_grid is not None:
        if not isinstance(prob, DirichletParams):
            raise UsageError("--alpha-grid needs a Dirichlet problem")
        if args.u is None or args.u_grid is not None:
            raise UsageError("--alpha-grid needs a single --u")
        var = "alpha"
        points = [(DirichletParams(a, prob.base), args.u) for a in args.alpha_grid]
    else:
        var = "u"
        points = [(prob, u) for u in _thresholds(args)]
    rows = []
    for i, (pr, u) in enumerate(points):
        row = {var: pr.alpha if var == "alpha" else u}
        for kind in kinds:
            rep = compute_bound(pr, kind, u, args.rule)
            row[kind] = rep.log_bound
            row[f"{kind}_valid"] = rep.valid
        ref, _ = _reference(pr, u, args, i)
        row.update(ref)
        rows.append(row)
    columns = list(rows[0]) if rows else [var]
    writer = RecordWriter(out, args.format, columns)
    echo = {**_problem_echo(prob), "rule": str(args.rule), "n": args.n, "seed": args.seed}
    for row in rows:
        if args.format == "json":
            row = {"version": __version__, "command": "sweep", "input": echo, **row}
        writer.write(row)
    return EXIT_OK


def cmd_check(args, out):
    verdicts = run_suite(args.suite, n=args.n, seed=args.seed, workers=args.workers)
    # workers is left out of the echo: it cannot change the output
    echo = {"suite": args.suite, "n": args.n, "seed": args.seed}
    writer = RecordWriter(out, args.format, ["version", "command", "input", "name", "status", "detail"])
    for v in verdicts:
        writer.write({"version": __version__, "command": "check", "input": echo, "name": v.name,
                      "status": v.status, "detail": v.detail})
    return EXIT_FAIL if any(v.failed for v in verdicts) else EXIT_OK


COMMANDS = {"bound": cmd_bound, "kinf": cmd_kinf, "validate": cmd_validate, "sweep": cmd_sweep, "check": cmd_check}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    if getattr(args, "n", 1) < 1:
        parser.error("--n must be >= 1")
    if hasattr(args, "confidence") and not 0 < args.confidence < 1:
        parser.error("--confidence must lie in (0, 1)")
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, DomainError) as exc:
        print(f"dptail {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # reader went away (e.g. piped into head); stop quietly
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    finally:
        if out is not sys.stdout:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
