"""Command-line interface: ``coupon-mixture <command> ...``.

Commands and their CSV columns:

  prob-first   single route: the value alone; --method all:
               kind,name,value,tolerance,agree
  moments      method,which,r,value,decimal,error,label
  convergence  first-detection / mean / variance:
               study,M,exact,asymptotic,ratio,source
               gumbel: study,M,samples,D,critical_05,critical_01,result
  simulate     EmpiricalSummary as JSON

Exit codes: 0 success, 2 configuration error, 3 numerical refusal,
4 runtime or I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import asymptotics as asy
from . import exact
from .model import (
    GroupMixture,
    InvalidMixture,
    ScalingFamily,
    load_config,
    mixture_from_scaling,
    parse_groups,
    parse_lambda,
    parse_scaling,
)
from .montecarlo import SimConfig, estimate, normalized_samples
from .quadrature import DEFAULT_SETTINGS, QuadratureError
from .stats import gumbel_cdf, ks_statistic

EXIT_OK, EXIT_CONFIG, EXIT_REFUSAL, EXIT_RUNTIME = 0, 2, 3, 4

STUDIES = ("first-detection", "mean", "variance", "gumbel")
RATIO_COLUMNS = ("study", "M", "exact", "asymptotic", "ratio", "source")
GUMBEL_COLUMNS = ("study", "M", "samples", "D", "critical_05", "critical_01", "result")
MOMENT_COLUMNS = ("method", "which", "r", "value", "decimal", "error", "label")
ROUTE_COLUMNS = ("kind", "name", "value", "tolerance", "agree")


class ConfigError(Exception):
    pass


def fmt(x) -> str:
    """12 significant digits for reals, ``num/den`` for exact rationals."""
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _count(text: str) -> int:
    """Integers written plainly or in float notation such as ``1e6``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(value)


def _grid(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


# -- input ------------------------------------------------------------------------


def _add_input(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="JSON file with 'groups' or 'scaling'")
    src.add_argument("--groups", help="inline pool, count:prob[,count:prob...]; e.g. '2:1/4,1:1/2'")
    src.add_argument("--scaling", help="two-group family nu1,nu2,lambda,M")
    p.add_argument("--swap-groups", action="store_true", help="reverse the group order")


def _add_mc(p: argparse.ArgumentParser, trials: int = 100_000) -> None:
    p.add_argument("--trials", type=_count, default=trials)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_count, default=1)


def _load(args) -> tuple[GroupMixture, ScalingFamily | None]:
    if args.config is not None:
        cfg = load_config(args.config)
    elif args.groups is not None:
        cfg = parse_groups(args.groups)
    else:
        cfg = parse_scaling(args.scaling)
    family = cfg if isinstance(cfg, ScalingFamily) else None
    m = mixture_from_scaling(cfg) if family else cfg
    if args.swap_groups:
        m = m.swapped()
        family = family.swapped() if family else None
    return m, family


def _emit_csv(out, header: Sequence[str], rows) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def _sim(args, m: GroupMixture, trials: int | None = None, **kw):
    n = args.trials if trials is None else trials
    return estimate(m, SimConfig(seed=args.seed, trials=n, workers=args.workers, **kw))


# -- prob-first ---------------------------------------------------------------------


def _routes(args, m: GroupMixture):
    """(name, value, tolerance) for every applicable route."""
    l = args.group
    out = []
    res = exact.first_detection_prob_sum(m, l, args.mode)
    out.append(("sum", res.value, res.rel_error_estimate * abs(float(res.value))))
    try:
        out.append(("dp", exact.first_detection_prob_dp(m, l), 0.0 if m.is_rational else 1e-12))
    except exact.MemoryBudgetExceeded:
        pass
    if m.g == 2:
        for form in exact.INTEGRAL_FORMS:
            v = exact.p_t1_before_t2_integral(m, form)
            v = v if l == 1 else 1 - v
            out.append((f"integral:{form}", v, 2 * DEFAULT_SETTINGS.target(v)))
    s = _sim(args, m)
    out.append(("mc", s.first_freq[l - 1], 4 * s.first_freq_se()[l - 1]))
    return out


def cmd_prob_first(args, out) -> int:
    m, _ = _load(args)
    if not 1 <= args.group <= m.g:
        raise ConfigError(f"--group must lie in 1..{m.g}")
    method = args.method
    if method == "all":
        routes = _routes(args, m)
        rows = [("value", name, v, tol, "") for name, v, tol in routes]
        for (na, va, ta), (nb, vb, tb) in itertools.combinations(routes, 2):
            both_exact = isinstance(va, Fraction) and isinstance(vb, Fraction)
            delta = va - vb if both_exact else float(va) - float(vb)
            tol = ta + tb + 1e-12 * (not both_exact)
            rows.append(("delta", f"{na}-{nb}", delta, tol, abs(float(delta)) <= tol))
        _emit_csv(out, ROUTE_COLUMNS, rows)
        return EXIT_OK
    if method == "sum":
        value = exact.first_detection_prob_sum(m, args.group, args.mode).value
    elif method == "dp":
        exact_dp = {"rational": True, "float": False}.get(args.mode)
        value = exact.first_detection_prob_dp(m, args.group, exact=exact_dp)
    elif method == "mc":
        s = _sim(args, m)
        print(f"{fmt(s.first_freq[args.group - 1])} +- {fmt(s.first_freq_se()[args.group - 1])}", file=out)
        return EXIT_OK
    elif method.startswith("integral:"):
        if m.g != 2:
            raise ConfigError("integral forms need a two-group pool")
        value = exact.p_t1_before_t2_integral(m, method.partition(":")[2])
        value = value if args.group == 1 else 1 - value
    else:
        raise ConfigError(f"unknown method {method!r}")
    print(fmt(value), file=out)
    return EXIT_OK


# -- moments --------------------------------------------------------------------------


def _asymptotic_moment(m: GroupMixture, family: ScalingFamily | None, r: float, which: str):
    """(value, label, alternatives)."""
    if family is None:
        if m.g == 1:
            series = asy.uniform_rising_moment_series(m.counts[0], r, asy.MAX_SERIES_ORDER)
            label = f"series in 1/ln N to order {series.truncation_order}, first omitted term {series.first_omitted:.3g}"
            if series.first_omitted == 0:
                label += " (series terminates; error is lower order in N)"
            return series.value, label, {}
        raise ConfigError("asymptotic moments need --scaling (or a single uniform group)")
    if which not in ("T1", "T2", "T"):
        raise ConfigError("scaling moments use --which T1, T2 or T")
    if r == 1:
        if which == "T":
            p = asy.mean_T_asymptotic(family)
            return p.value, p.error_order, p.alternatives
        fn = asy.mean_T1_asymptotic if which == "T1" else asy.mean_T2_asymptotic
        return fn(family, "harmonic"), "exponentially small", {"expanded": fn(family, "expanded")}
    if r == 2:
        if which == "T":
            p = asy.second_rising_T_asymptotic(family)
            return p.value, p.error_order, {}
        fn = asy.second_rising_T1_asymptotic if which == "T1" else asy.second_rising_T2_asymptotic
        return fn(family), "exponentially small", {}
    return asy.moment_r_leading(family, r, which), "leading order, relative o(1)", {}


def cmd_moments(args, out) -> int:
    m, family = _load(args)
    r, which = args.r, args.which
    try:
        exact._groups_for(m, which)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = []
    if args.method == "quadrature":
        v = exact.mixture_moment(m, r, DEFAULT_SETTINGS, which)
        rows.append(("quadrature", which, r, v, v, DEFAULT_SETTINGS.target(v), "quadrature tolerance"))
    elif args.method == "subset":
        try:
            v = exact.mixture_moment_subset_sum(m, r, which)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        err = 0.0 if isinstance(v, Fraction) else 1e-12 * abs(v)
        rows.append(("subset", which, r, v, float(v), err, "exact" if isinstance(v, Fraction) else "rounding"))
    elif args.method == "asymptotic":
        v, label, alts = _asymptotic_moment(m, family, r, which)
        rows.append(("asymptotic", which, r, v, v, "", label))
        for name, a in alts.items():
            rows.append((f"asymptotic:{name}", which, r, a, a, "", f"{name} form, constant term kept to O(1/M)"))
    else:
        orders = () if r == 1 else (r,)
        s = _sim(args, m, rising_orders=orders)
        rm = s.stats[which] if r == 1 else s.rising[which][r]
        rows.append(("mc", which, r, rm.mean, rm.mean, rm.se_mean, f"standard error, {s.trials} trials"))
    _emit_csv(out, MOMENT_COLUMNS, rows)
    return EXIT_OK


# -- convergence ------------------------------------------------------------------------


def _family_from_flags(args, M: int) -> ScalingFamily:
    f = ScalingFamily(args.nu1, args.nu2, args.lam, M)
    if not float(f.lam) > 1:
        raise ConfigError(
            f"lambda must exceed 1 (got {fmt(float(f.lam))}); this loses no generality, "
            "swap the group labels so that group 2 has the larger per-coupon probability"
        )
    return f


def cmd_convergence(args, out) -> int:
    study = args.study
    families = [_family_from_flags(args, M) for M in args.M_grid]
    if study == "gumbel":
        rows = []
        for f in families:
            s = _sim(args, mixture_from_scaling(f), args.samples, retain_samples="T")
            ks = ks_statistic(normalized_samples(s.column("T"), "T", family=f), gumbel_cdf)
            verdict = "pass" if ks.passes(0.05) else ("soft-fail" if ks.passes(0.01) else "fail")
            rows.append((study, f.M, ks.n, ks.D, ks.critical(0.05), ks.critical(0.01), verdict))
        _emit_csv(out, GUMBEL_COLUMNS, rows)
        return EXIT_OK

    rows = []
    for f in families:
        m = mixture_from_scaling(f)
        source = args.source
        if study == "first-detection":
            pred = asy.p_first_asymptotic(f)
            if source == "mc":
                value = _sim(args, m, args.samples).first_freq[0]
            else:
                value, source = exact.p_t1_before_t2_integral(m, "ratio"), "integral"
        elif study == "mean":
            pred = asy.mean_T_asymptotic(f).value
            if source == "mc":
                value = _sim(args, m, args.samples).stats["T"].mean
            else:
                value, source = exact.mixture_moment(m, 1.0), "quadrature"
        else:
            pred = asy.var_T_asymptotic(f)
            if source == "mc":
                value = _sim(args, m, args.samples).stats["T"].var
            else:
                value, source = exact.detection_variance(m, "T"), "quadrature"
        rows.append((study, f.M, value, pred, value / pred, source))
    _emit_csv(out, RATIO_COLUMNS, rows)
    return EXIT_OK


# -- simulate ---------------------------------------------------------------------------------


def cmd_simulate(args, out) -> int:
    m, _ = _load(args)
    retain = "none" if args.dump is None else args.dump_values
    s = _sim(args, m, retain_samples=retain)
    if args.dump is not None:
        column = s.column("T") if retain == "T" else s.samples
        with open(args.dump, "w") as fh:
            for row in column:
                if retain == "T":
                    fh.write(f"{int(row)}\n")
                else:
                    fh.write(" ".join(str(int(v)) for v in row) + "\n")
    print(s.to_json(), file=out)
    return EXIT_OK


# -- entry point -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coupon-mixture",
        description=__doc__.split("\n\n")[0],
        epilog="Exit codes: 0 success, 2 configuration error, 3 numerical refusal, 4 runtime or I/O failure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "prob-first",
        help="probability that a group is completed first",
        description="Single methods print the value alone (exact rationals as num/den). "
        f"--method all prints CSV with columns {','.join(ROUTE_COLUMNS)}.",
    )
    _add_input(p)
    p.add_argument("--group", type=int, default=1, help="1-based group index")
    p.add_argument(
        "--method",
        default="sum",
        help="sum, dp, mc, all, or integral:FORM with FORM in " + ", ".join(exact.INTEGRAL_FORMS),
    )
    p.add_argument("--mode", choices=[e.value for e in exact.EvalMode], default="auto")
    _add_mc(p)
    p.set_defaults(func=cmd_prob_first)

    p = sub.add_parser(
        "moments",
        help="rising moment E[X(X+1)...] of a detection time",
        description=f"CSV columns: {','.join(MOMENT_COLUMNS)}.",
    )
    _add_input(p)
    p.add_argument("--r", type=float, default=1.0, help="order r > 0 of Gamma(X+r)/Gamma(X)")
    p.add_argument("--which", default="T", help="T (whole pool) or Tj for group j")
    p.add_argument("--method", choices=("quadrature", "subset", "asymptotic", "mc"), default="quadrature")
    _add_mc(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser(
        "convergence",
        help="exact or simulated values against large-M predictions",
        description=f"CSV columns: {','.join(RATIO_COLUMNS)}; for gumbel {','.join(GUMBEL_COLUMNS)}.",
    )
    p.add_argument("--study", choices=STUDIES, required=True)
    p.add_argument("--lambda", dest="lam", type=parse_lambda, default=Fraction(2))
    p.add_argument("--nu1", type=int, default=1)
    p.add_argument("--nu2", type=int, default=1)
    p.add_argument("--M-grid", dest="M_grid", type=_grid, default=[5, 10, 20, 40, 80])
    p.add_argument("--source", choices=("exact", "mc"), default="exact", help="exact routes or simulation")
    p.add_argument("--samples", type=_count, default=10_000, help="trials for mc and gumbel")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_count, default=1)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("simulate", help="Monte Carlo summary as JSON")
    _add_input(p)
    _add_mc(p)
    p.add_argument("--dump", type=Path, help="write retained samples, one trial per line")
    p.add_argument("--dump-values", choices=("T", "all"), default="T", help="T alone or every T_j per line")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except (ConfigError, InvalidMixture, IndexError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (exact.NumericalRefusal, exact.MemoryBudgetExceeded, QuadratureError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSAL
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
