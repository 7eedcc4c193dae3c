"""Command-line interface: ``ifrci {estimate,ci,gcdf,coverage}``.

Exit status: 0 success, 2 invalid arguments, 3 numerical failure,
4 domain error (e.g. no positives in the sample).
"""

import argparse
import csv
import io
import json
import logging
import math
import sys

from . import __version__
from .exceptions import DomainError, NumericalError
from .intervals import METHODS, CiConfig, confidence_interval
from .model import EvalMode, ModelPoint, StudyCounts, estimate, g_cdf
from .popsim import MODELS, PopulationSpec, coverage_experiment

log = logging.getLogger("ifrci")

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_DOMAIN = 4

DEFAULTS = {
    "alpha": 0.05,
    "beta": 0.01,
    "method": "all",
    "mode": "exact",
    "reps": 200_000,
    "seed": 0,
    "theta_grid": 1e-4,
    "endpoint_tol": 1e-6,
    "stride": 1,
    "model": "binomial",
    "replications": 2000,
    "jobs": 1,
    "format": "json",
}

CI_CSV_FIELDS = ["method", "target", "lower", "upper", "unbounded_upper",
                 "alpha", "beta", "n_i_hat", "theta_hat"]
COVERAGE_CSV_FIELDS = ["method", "target", "model", "replications", "skipped",
                       "covered", "coverage_rate", "mean_width"]


class UsageError(Exception):
    pass


def _add_counts(p, need_positive=True):
    p.add_argument("--nt", type=int, help="population size N_T")
    p.add_argument("--ns", "--nsample", dest="ns", type=int, help="sample size N_S")
    if need_positive:
        p.add_argument("--np", type=int, help="sample positives N_P")
        p.add_argument("--nd", type=int, help="observed deaths N_D")


def _add_eval(p):
    p.add_argument("--mode", choices=["exact", "mc"], help="distribution evaluation (default exact)")
    p.add_argument("--reps", type=int, help="Monte Carlo replications (default 200000)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")


def _add_ci(p):
    p.add_argument("--alpha", type=float, help="miscoverage level (default 0.05)")
    p.add_argument("--beta", type=float, help="preliminary-interval level for cs (default 0.01)")
    p.add_argument("--theta-grid", dest="theta_grid", type=float, help="theta scan step (default 1e-4)")
    p.add_argument("--endpoint-tol", dest="endpoint_tol", type=float,
                   help="endpoint bisection tolerance (default 1e-6)")
    p.add_argument("--stride", type=int, help="n_I scan stride for cs (default 1)")
    p.add_argument("--verify-connected", dest="verify_connected", action="store_const", const=True,
                   help="check the whole theta grid for accepted points outside the interval")
    _add_eval(p)


def _add_output(p, formats=("json", "csv", "table")):
    p.add_argument("--format", choices=formats, help="output format (default json)")
    p.add_argument("--percent", action="store_const", const=True,
                   help="show rates as percentages (table format only)")
    p.add_argument("--config", help="JSON file with default values for any option")
    p.add_argument("-v", "--verbose", action="store_const", const=True, help="log progress to stderr")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ifrci",
        description="Infection fatality rate estimates and confidence intervals.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="point estimates of N_I and the IFR")
    _add_counts(p)
    _add_output(p)

    p = sub.add_parser("ci", help="confidence intervals for the IFR")
    _add_counts(p)
    p.add_argument("--method", choices=[*METHODS, "all"], help="interval construction (default all)")
    _add_ci(p)
    _add_output(p)

    p = sub.add_parser("gcdf", help="CDF of the ratio statistic under the two-binomial model")
    _add_counts(p)
    p.add_argument("--ni", type=int, help="hypothesised number of infections n_I")
    p.add_argument("--theta0", type=float, help="hypothesised IFR")
    p.add_argument("--at", type=float, help="evaluation point c")
    _add_eval(p)
    _add_output(p)

    p = sub.add_parser("coverage", help="Monte Carlo coverage experiment")
    p.add_argument("--nt", type=int, help="population size N_T")
    p.add_argument("--ns", "--nsample", dest="ns", type=int, help="sample size N_S")
    p.add_argument("--model", choices=MODELS, help="generative model (default binomial)")
    p.add_argument("--ni", type=int, help="number of infections N_I (held fixed)")
    p.add_argument("--ndc", type=int, help="counterfactual deaths N_DC (theta2 = N_DC / N_T)")
    p.add_argument("--theta2", type=float, help="population IFR (binomial model only)")
    p.add_argument("--replications", type=int, help="replications (default 2000)")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("--method", choices=[*METHODS, "all"], help="methods to evaluate (default all)")
    _add_ci(p)
    _add_output(p)
    return parser


def _merge(args):
    """Explicit flags override the --config document, which overrides defaults."""
    values = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"--config: cannot read {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise UsageError("--config: expected a JSON object")
        values.update({k.replace("-", "_"): v for k, v in doc.items()})
    values.update({k: v for k, v in vars(args).items() if v is not None})
    return values


def _require(values, *names):
    for name in names:
        if values.get(name) is None:
            raise UsageError(f"missing required option --{name.replace('_', '-')}")
    return [values[n] for n in names]


def _build(builder, flag, *a, **kw):
    try:
        return builder(*a, **kw)
    except DomainError as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _counts(values):
    nt, ns, npos, nd = _require(values, "nt", "ns", "np", "nd")
    return _build(StudyCounts, "--nt/--ns/--np/--nd", nt, ns, npos, nd)


def _eval_mode(values):
    mode = "monte_carlo" if values["mode"] in ("mc", "monte_carlo") else values["mode"]
    return _build(EvalMode, "--mode/--reps/--seed", mode, values["reps"], values["seed"])


def _ci_config(values):
    return _build(
        CiConfig, "--alpha/--beta/--theta-grid/--endpoint-tol/--stride",
        alpha=values["alpha"], beta=values["beta"], eval_mode=_eval_mode(values),
        theta_grid_step=values["theta_grid"], endpoint_tol=values["endpoint_tol"],
        n_i_stride=values["stride"], verify_connected=bool(values.get("verify_connected")),
    )


def _methods(values):
    return list(METHODS) if values["method"] == "all" else [values["method"]]


def _finite(x):
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x


def _estimates(counts):
    try:
        n_i_hat, theta_hat = estimate(counts)
    except DomainError:
        return counts.n_infected_hat, None
    return n_i_hat, theta_hat


def cmd_estimate(values):
    counts = _counts(values)
    n_i_hat, theta_hat = estimate(counts)
    return {
        "n_total": counts.n_total,
        "n_sample": counts.n_sample,
        "n_positive": counts.n_positive,
        "n_deaths": counts.n_deaths,
        "n_i_hat": n_i_hat,
        "n_i_hat_rounded": round(n_i_hat),
        "theta_hat": theta_hat,
    }


def _diagnostics(d):
    def pair(v):
        return None if v is None else [_finite(x) for x in v]
    return {
        "proportion_interval": pair(d.get("proportion_interval")),
        "evaluations": d.get("evaluations"),
        "n_i_range": pair(d.get("n_i_range")),
        "n_i_used": d.get("n_i_used"),
        "p_value_at_endpoints": pair(d.get("p_value_at_endpoints")),
        "argmax_n_i_at_endpoints": pair(d.get("argmax_n_i_at_endpoints")),
        "outside_accepted": d.get("outside_accepted"),
    }


def cmd_ci(values):
    counts = _counts(values)
    config = _ci_config(values)
    n_i_hat, theta_hat = _estimates(counts)
    intervals = []
    for method in _methods(values):
        log.info("computing %s interval", method)
        res = confidence_interval(counts, method, config)
        intervals.append({
            "method": res.method,
            "target": res.target,
            "lower": res.lower,
            "upper": _finite(res.upper),
            "unbounded_upper": res.interval.unbounded_upper,
            "alpha": config.alpha,
            "beta": config.beta,
            "n_i_hat": n_i_hat,
            "theta_hat": theta_hat,
            "diagnostics": _diagnostics(res.diagnostics),
        })
    return {
        "n_total": counts.n_total,
        "n_sample": counts.n_sample,
        "n_positive": counts.n_positive,
        "n_deaths": counts.n_deaths,
        "mode": config.eval_mode.mode,
        "intervals": intervals,
    }


def cmd_gcdf(values):
    nt, ns, ni, theta0, c = _require(values, "nt", "ns", "ni", "theta0", "at")
    counts = _build(StudyCounts, "--nt/--ns", nt, ns, 0, 0)
    point = _build(ModelPoint, "--ni/--theta0", ni, theta0)
    if point.n_infected > counts.n_total:
        raise UsageError(f"--ni: {ni} exceeds --nt {nt}")
    if not c >= 0:
        raise UsageError(f"--at: must be a non-negative rate, got {c}")
    mode = _eval_mode(values)
    return {
        "c": c,
        "n_infected": point.n_infected,
        "theta0": point.theta0,
        "n_total": counts.n_total,
        "n_sample": counts.n_sample,
        "mode": mode.mode,
        "replications": mode.replications if mode.mode == "monte_carlo" else None,
        "seed": mode.seed if mode.mode == "monte_carlo" else None,
        "value": g_cdf(c, point, counts, mode),
    }


def cmd_coverage(values):
    nt, ns, ni = _require(values, "nt", "ns", "ni")
    ndc, theta2 = values.get("ndc"), values.get("theta2")
    if ndc is None and theta2 is None:
        raise UsageError("missing required option --ndc (or --theta2 with --model binomial)")
    if theta2 is not None and values["model"] == "population":
        raise UsageError("--theta2: only valid with --model binomial; use --ndc")
    if ndc is None:
        ndc = round(theta2 * nt) if 0 <= theta2 <= 1 else 0
    spec = _build(PopulationSpec, "--nt/--ns/--ni/--ndc/--theta2/--replications/--seed",
                  nt, ns, ni, ndc, values["replications"], values["seed"], theta2)
    config = _ci_config(values)
    if values["jobs"] < 1:
        raise UsageError("--jobs: must be >= 1")
    report = coverage_experiment(spec, config, values["model"], _methods(values), values["jobs"])
    for flag in report.flags:
        log.warning("%s", flag)
    return report.to_dict()


COMMANDS = {"estimate": cmd_estimate, "ci": cmd_ci, "gcdf": cmd_gcdf, "coverage": cmd_coverage}


def _rate(x, percent):
    if x is None:
        return "n/a"
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return f"{100 * x:.4f}%" if percent else f"{x:.6g}"


def _table(command, report, percent):
    lines = []
    if command == "estimate":
        lines.append(f"N_I estimate : {report['n_i_hat']:.4f} (rounded {report['n_i_hat_rounded']})")
        lines.append(f"IFR estimate : {_rate(report['theta_hat'], percent)}")
    elif command == "ci":
        lines.append(f"{'method':<8}{'target':<8}{'lower':>14}{'upper':>14}")
        for r in report["intervals"]:
            upper = "inf" if r["unbounded_upper"] else _rate(r["upper"], percent)
            lines.append(f"{r['method']:<8}{r['target']:<8}{_rate(r['lower'], percent):>14}{upper:>14}")
        for r in report["intervals"]:
            d = r["diagnostics"]
            lines.append(f"[{r['method']}] diagnostics")
            for key in ("proportion_interval", "n_i_range", "n_i_used", "evaluations",
                        "p_value_at_endpoints", "argmax_n_i_at_endpoints"):
                if d[key] is not None:
                    lines.append(f"  {key:<25}{d[key]}")
    elif command == "gcdf":
        lines.append(f"G({report['c']} | n_I={report['n_infected']}, theta0={report['theta0']}) "
                     f"= {report['value']:.12g}  [{report['mode']}]")
    else:
        lines.append(f"model={report['model']} replications={report['replications']} "
                     f"theta2={_rate(report['theta2'], percent)}")
        lines.append(f"{'method':<8}{'target':<8}{'skipped':>8}{'covered':>9}{'rate':>9}{'mean width':>14}")
        for r in report["rows"]:
            rate = "n/a" if r["coverage_rate"] is None else f"{r['coverage_rate']:.4f}"
            lines.append(f"{r['method']:<8}{r['target']:<8}{r['skipped']:>8}{r['covered']:>9}"
                         f"{rate:>9}{_rate(r['mean_width'], percent):>14}")
        m = report["marginals"]
        lines.append(f"corr(N_P, N_D) = {m['correlation']}, mean theta1 = {m['theta1_mean']}")
        lines.extend(f"warning: {f}" for f in report["flags"])
    return "\n".join(lines) + "\n"


def _csv(command, report):
    buf = io.StringIO()
    if command == "ci":
        w = csv.DictWriter(buf, CI_CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerows(report["intervals"])
    elif command == "coverage":
        w = csv.DictWriter(buf, COVERAGE_CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(report["rows"])
    else:
        w = csv.DictWriter(buf, list(report), lineterminator="\n")
        w.writeheader()
        w.writerow(report)
    return buf.getvalue()


def render(command, report, fmt="json", percent=False):
    if fmt == "table":
        return _table(command, report, percent)
    if fmt == "csv":
        return _csv(command, report)
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        values = _merge(args)
        logging.basicConfig(level=logging.INFO if values.get("verbose") else logging.WARNING,
                            format="%(levelname)s: %(message)s", stream=sys.stderr)
        report = COMMANDS[args.command](values)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ifrci {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"ifrci: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DomainError as exc:
        print(f"ifrci: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    stdout.write(render(args.command, report, values["format"], bool(values.get("percent"))))
    return 0


if __name__ == "__main__":
    sys.exit(main())
