"""Command line interface: ``fmdist {pmf,moments,dist,bounds,simulate,verify}``.

Tables go to stdout (or ``--out``) as CSV or JSON.  Exit codes: 0 success,
1 a property or bound check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction

from . import __version__
from . import distances as D
from . import distributions as P
from . import simulation as S
from . import verify as V
from .numerics import DEFAULT_DIGITS, HighPrecision, parse_rational

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def rational_arg(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def range_arg(text: str) -> tuple[int, int]:
    try:
        a, b = (int(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}") from None
    if not 1 <= a <= b <= 60:
        raise argparse.ArgumentTypeError("range must satisfy 1 <= a <= b <= 60")
    return a, b


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _require_matching_lambda(lam: Fraction) -> None:
    if not 0 < lam <= 1:
        raise UsageError(f"lambda must lie in (0, 1] for the matching law, got {lam}")


class Table:
    """Rows of string cells plus the context needed to emit CSV or JSON."""

    def __init__(self, columns: list[str], params: dict, digits: int, working: int):
        self.columns = columns
        self.params = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in params.items()}
        self.rows: list[dict[str, str]] = []
        self.digits = digits
        self.meta: dict = {"working_precision": working, "version": __version__}

    def num(self, value) -> str:
        if value is None:
            return ""
        if isinstance(value, HighPrecision):
            return value.format(self.digits)
        if isinstance(value, Fraction):
            return HighPrecision.exact(value, self.digits + 5).format(self.digits)
        return str(value)

    def add(self, **cells) -> None:
        self.rows.append({c: "" if cells.get(c) is None else str(cells[c]) for c in self.columns})

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = {"params": self.params, "rows": self.rows, "meta": self.meta}
            return json.dumps(doc, indent=2) + "\n"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([row[c] for c in self.columns])
        return buf.getvalue()


def _table(args, columns, **params) -> Table:
    return Table(columns, params, args.digits, args.working)


# commands -------------------------------------------------------------------


def cmd_pmf(args) -> int:
    t = _table(args, ["j", "exact", "decimal"], dist=args.dist, n=args.n, **{"lambda": args.lam})
    if args.dist == "poisson-prefix":
        lam = args.lam if args.lam is not None else Fraction(1)
        if lam <= 0:
            raise UsageError("lambda must be positive")
        for j, mass in enumerate(P.poisson_pmf_prefix(lam, args.n, args.working)):
            t.add(j=j, exact="", decimal=t.num(mass))
        return _emit(args, t)
    if args.n < 1:
        raise UsageError("n must be >= 1")
    if args.dist == "classical":
        pmf = P.classical_matching_pmf(args.n)
    else:
        lam = args.lam if args.lam is not None else Fraction(1)
        _require_matching_lambda(lam)
        if args.method == "thinning":
            pmf = P.thinning_pmf(args.n, lam)
        elif args.method == "enumerate":
            pmf = S.enumerate_exact(args.n, lam, args.workers)
        else:
            pmf = P.generalized_matching_pmf(args.n, lam, method=args.method)
    for j, q in enumerate(pmf.probs):
        t.add(j=j, exact=str(q), decimal=t.num(q))
    return _emit(args, t)


def cmd_moments(args) -> int:
    t = _table(args, ["k", "exact", "decimal"], dist=args.dist, n=args.n, kmax=args.kmax, **{"lambda": args.lam})
    lam = args.lam if args.lam is not None else Fraction(1)
    if args.dist == "poisson":
        if lam <= 0:
            raise UsageError("lambda must be positive")
        moments = [lam**k for k in range(args.kmax + 1)]
    else:
        if args.n < 1:
            raise UsageError("n must be >= 1")
        if args.dist == "classical":
            pmf = P.classical_matching_pmf(args.n)
        else:
            _require_matching_lambda(lam)
            pmf = P.generalized_matching_pmf(args.n, lam)
        moments = P.factorial_moments(pmf, args.kmax).moments
    for k, m in enumerate(moments):
        t.add(k=k, exact=str(m), decimal=t.num(m))
    return _emit(args, t)


def cmd_dist(args) -> int:
    lam = args.lam
    _require_matching_lambda(lam)
    if args.n < 1:
        raise UsageError("n must be >= 1")
    columns = ["n", "lambda", "exact", "integral_check", "generic", "lower", "upper", "asymptotic", "ratio"]
    if args.metric == "fm":
        if args.alpha is None:
            raise UsageError("--alpha is required for --metric fm")
        if args.alpha <= 0:
            raise UsageError("alpha must be positive")
        columns.insert(2, "alpha")
    t = _table(args, columns, metric=args.metric, n=args.n, alpha=args.alpha, method=args.method, **{"lambda": lam})
    want = {"series", "integral", "generic"} if args.method == "all" else {args.method}

    p = P.MatchingParams(args.n, lam)
    if args.metric == "fm":
        report = D.d_alpha_matching(p, args.alpha, digits=args.working)
        generic = None
        if "generic" in want:
            moments = [P.matching_factorial_moment(p, k) for k in range(args.n + 1)]
            generic = D.d_alpha_generic(moments, D.PoissonMoments(lam), args.alpha, args.working)
    else:
        report = D.tv_matching(p, digits=args.working)
        generic = D.tv_generic(P.generalized_matching_pmf(p), D.PoissonMoments(lam), args.working) if "generic" in want else None
    t.add(
        n=args.n,
        alpha=str(args.alpha) if args.alpha is not None else None,
        exact=t.num(report.exact) if "series" in want else None,
        integral_check=t.num(report.integral_check) if "integral" in want else None,
        generic=t.num(generic),
        lower=t.num(report.lower_bound),
        upper=t.num(report.upper_bound),
        asymptotic=t.num(report.asymptotic),
        ratio=t.num(report.ratio_to_asymptotic),
        **{"lambda": str(lam)},
    )
    return _emit(args, t)


def cmd_bounds(args) -> int:
    a, b = args.n_range
    if args.reference:
        t = _table(args, ["n", "diaconis", "dasgupta", "corollary", "tv_exact", "ordered"], reference=True, n_range=f"{a}:{b}")
        ok_all = True
        for n in range(a, b + 1):
            ref = D.reference_bounds(n, args.working)
            tv = D.tv_matching(n, 1, digits=args.working).exact
            ok = (
                tv.certainly_lt(ref.dasgupta)
                and ref.dasgupta.certainly_lt(ref.diaconis)
                and tv.certainly_lt(ref.corollary)
            )
            ok_all &= ok
            t.add(
                n=n,
                diaconis=t.num(ref.diaconis),
                dasgupta=t.num(ref.dasgupta),
                corollary=t.num(ref.corollary),
                tv_exact=t.num(tv),
                ordered="pass" if ok else "fail",
            )
        return _emit(args, t, ok_all)

    lam = args.lam
    _require_matching_lambda(lam)
    if args.metric == "fm" and (args.alpha is None or args.alpha <= 0):
        raise UsageError("--metric fm needs a positive --alpha")
    t = _table(
        args,
        ["n", "exact", "lower", "upper", "asymptotic", "ratio", "sandwich"],
        metric=args.metric,
        alpha=args.alpha,
        n_range=f"{a}:{b}",
        **{"lambda": lam},
    )
    ok_all = True
    for n in range(a, b + 1):
        if args.metric == "fm":
            r = D.d_alpha_matching(n, args.alpha, lam, digits=args.working)
        else:
            r = D.tv_matching(n, lam, digits=args.working)
        ok = r.sandwich_holds()
        ok_all &= ok
        t.add(
            n=n,
            exact=t.num(r.exact),
            lower=t.num(r.lower_bound),
            upper=t.num(r.upper_bound),
            asymptotic=t.num(r.asymptotic),
            ratio=t.num(r.ratio_to_asymptotic),
            sandwich="pass" if ok else "fail",
        )
    return _emit(args, t, ok_all)


def cmd_simulate(args) -> int:
    _require_matching_lambda(args.lam)
    cfg = S.SimConfig(args.n, args.lam, args.samples, args.seed, args.workers, args.z_threshold)
    emp, stats = S.run_monte_carlo(cfg)
    exact = P.generalized_matching_pmf(args.n, args.lam)
    t = _table(
        args,
        ["j", "count", "empirical", "exact", "z"],
        n=args.n,
        samples=args.samples,
        seed=args.seed,
        workers=args.workers,
        **{"lambda": args.lam},
    )
    for j, count in enumerate(emp.counts):
        z = stats.per_bin_z[j]
        t.add(
            j=j,
            count=count,
            empirical=t.num(Fraction(count, emp.total)),
            exact=str(exact[j]),
            z="" if z is None else f"{z:.6f}",
        )
    t.meta.update(max_abs_dev=f"{stats.max_abs_dev:.6e}", passed=stats.passed, z_threshold=stats.z_threshold)
    if args.format == "csv":
        print(f"max_abs_dev={stats.max_abs_dev:.6e} pass={str(stats.passed).lower()}", file=sys.stderr)
    return _emit(args, t, stats.passed)


def cmd_verify(args) -> int:
    if args.list:
        for name in V.CHECKS:
            print(name)
        return EXIT_OK
    only = [name for chunk in args.only or [] for name in chunk.split(",") if name]
    unknown = [name for name in only if name not in V.CHECKS]
    if unknown:
        raise UsageError(f"unknown check(s): {', '.join(unknown)}; see 'verify --list'")
    options = V.Options(digits=args.working, workers=args.workers, seed=args.seed if args.seed is not None else V.SEED)
    t = _table(args, ["check", "result"], only=",".join(only) or "all")
    ok_all = True
    for name in only or list(V.CHECKS):
        start = time.perf_counter()
        (result,) = V.run([name], options)
        ok_all &= result.passed
        t.add(check=name, result="pass" if result.passed else "fail")
        t.meta.setdefault("details", {})[name] = result.detail
        print(f"{'PASS' if result.passed else 'FAIL'} {name} ({time.perf_counter() - start:.1f}s): {result.detail}", file=sys.stderr)
    return _emit(args, t, ok_all)


def _emit(args, table: Table, ok: bool = True) -> int:
    text = table.render(args.format)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


# parser ---------------------------------------------------------------------


def _add_global(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--format", choices=["csv", "json"], default=default("csv"))
    parser.add_argument("--digits", type=positive_int, default=default(15), help="significant digits printed")
    parser.add_argument("--out", default=default(None), help="write output here instead of stdout")
    parser.add_argument("--workers", type=positive_int, default=default(1))
    parser.add_argument("--seed", type=nonneg_int, default=default(None))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fmdist", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_global(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, fn, help):
        p = sub.add_parser(name, help=help)
        _add_global(p, suppress=True)
        p.set_defaults(func=fn)
        return p

    p = command("pmf", cmd_pmf, "print a probability mass function")
    p.add_argument("--dist", choices=["classical", "generalized", "poisson-prefix"], required=True)
    p.add_argument("--n", type=nonneg_int, required=True)
    p.add_argument("--lambda", dest="lam", type=rational_arg)
    p.add_argument("--method", choices=["closed", "inclusion-exclusion", "thinning", "enumerate"], default="closed")

    p = command("moments", cmd_moments, "print descending factorial moments")
    p.add_argument("--dist", choices=["classical", "generalized", "poisson"], required=True)
    p.add_argument("--n", type=nonneg_int, default=1)
    p.add_argument("--lambda", dest="lam", type=rational_arg)
    p.add_argument("--kmax", type=nonneg_int, default=None)

    p = command("dist", cmd_dist, "distance between the matching law and Poisson")
    p.add_argument("--metric", choices=["fm", "tv"], required=True)
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--lambda", dest="lam", type=rational_arg, default=Fraction(1))
    p.add_argument("--alpha", type=rational_arg)
    p.add_argument("--method", choices=["series", "integral", "generic", "all"], default="all")

    p = command("bounds", cmd_bounds, "tabulate bounds over a range of n")
    p.add_argument("--metric", choices=["fm", "tv"], default="tv")
    p.add_argument("--reference", action="store_true", help="published bounds for lambda = 1")
    p.add_argument("--n-range", type=range_arg, required=True)
    p.add_argument("--lambda", dest="lam", type=rational_arg, default=Fraction(1))
    p.add_argument("--alpha", type=rational_arg)

    p = command("simulate", cmd_simulate, "Monte Carlo of the censored matching count")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--lambda", dest="lam", type=rational_arg, default=Fraction(1))
    p.add_argument("--samples", type=positive_int, required=True)
    p.add_argument("--z-threshold", type=float, default=S.DEFAULT_Z_THRESHOLD)

    p = command("verify", cmd_verify, "run the property checks")
    p.add_argument("--only", action="append", help="check name(s), comma separated")
    p.add_argument("--list", action="store_true", help="list check names and exit")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with 2 on usage errors
    args.working = max(DEFAULT_DIGITS, args.digits + 5)
    if args.seed is None and args.command == "simulate":
        args.seed = 0
    if getattr(args, "kmax", "absent") is None:
        args.kmax = args.n + 2
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    return EXIT_USAGE  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
