"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 domain error (zero measure, incompatible method, out-of-range argument).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from functools import partial

import numpy as np

from . import closed_forms as cf
from . import egf, oracle, samplers, verify
from .core import (Permutation, StatReport, WeightSequence, parse_weights,
                   render_exact, render_float)
from .errors import (CalibrationError, CapExceeded, DomainError, InvalidSpec,
                     SeriesOverflow, TailError, ZeroMeasure)

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


# -- output ------------------------------------------------------------------------

def emit_table(rows: list[dict[str, str]], columns, fmt: str, out, extra: dict | None = None) -> None:
    """Write rows as CSV or JSON; both carry the same strings."""
    if fmt == "json":
        doc = dict(extra or {})
        doc["columns"] = list(columns)
        doc["rows"] = rows
        json.dump(doc, out, indent=2)
        out.write("\n")
        return
    if extra:
        for k, v in extra.items():
            out.write(f"# {k}: {v}\n")
    writer = csv.DictWriter(out, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    writer.writerows(rows)


def _exact_or_float(v) -> str:
    if isinstance(v, Fraction) or (isinstance(v, int) and not isinstance(v, bool)):
        return render_exact(v)
    return render_float(v)


def _series_for(weights: WeightSequence, n: int, mode: str | None) -> egf.WeightedSeries:
    cap = egf.exact_cap()
    if mode == "exact" and n > cap:
        raise DomainError(f"exact mode is capped at n={cap} (set PERMPROF_NMAX_EXACT to raise it)")
    return egf.compute_series(weights, n, mode)


# -- commands --------------------------------------------------------------------------

def cmd_series(args, out) -> int:
    w = parse_weights(args.weights)
    if args.n < 0:
        raise DomainError("--n must be >= 0")
    s = _series_for(w, args.n, args.mode)
    emit_table(egf.series_rows(s), egf.SERIES_COLUMNS, args.format, out,
               {"weights": w.label, "mode": s.mode})
    return EXIT_OK


STATS_COLUMNS = ("row", "k", "sigma", "EX_k", "exact", "float", "closed_form", "difference")


def _row(row, k="", sigma="", ex="", value=None, closed=None) -> dict[str, str]:
    exact = render_exact(value) if isinstance(value, Fraction) else ""
    fval = float(value) if value is not None else None
    diff = ""
    if closed is not None and fval is not None:
        if isinstance(closed, Fraction) and isinstance(value, Fraction):
            diff = render_exact(value - closed)
        else:
            diff = render_float(fval - float(closed))
    return {"row": row, "k": str(k), "sigma": sigma, "EX_k": ex, "exact": exact,
            "float": render_float(fval), "closed_form": "" if closed is None else _exact_or_float(closed),
            "difference": diff}


def _ey_closed_form(w: WeightSequence, n: int, k: int):
    if w.kind == "ewens" and w.param > 0:
        return k * cf.ewens_k_cycle_mean(w.param, n, k)
    if w.kind in ("even", "odd"):
        return cf.parity_elements_in_k_cycles(w.kind, n, k)
    return None


def stats_rows(w: WeightSequence, n: int, mode: str | None) -> list[dict[str, str]]:
    if n < 1:
        raise DomainError("--n must be >= 1")
    s = _series_for(w, n, mode)
    if s.coeffs[n] == 0:
        raise ZeroMeasure(f"no permutation of [{n}] has positive weight under {w.label}")
    rows = []
    for k in range(1, n + 1):
        sig = w.sigma(k)
        ex = egf.expected_k_cycles(s, n, k)
        ey = egf.expected_elements_in_k_cycles(s, n, k)
        rows.append(_row("k", k, render_exact(sig), render_exact(ex) if s.exact else render_float(ex),
                         ey, _ey_closed_form(w, n, k)))
    mean = egf.total_cycles_mean(s, n)
    var = egf.total_cycles_variance(s, n)
    closed_mean = closed_var = None
    if w.kind == "ewens" and w.param > 0:
        closed_mean, closed_var = cf.ewens_mean_cycles(w.param, n), cf.ewens_var_cycles(w.param, n)
    elif w.kind == "even":
        closed_mean, closed_var = cf.even_cycle_bernoulli_moments(n)
    rows.append(_row("mean_cycles", value=mean, closed=closed_mean))
    rows.append(_row("variance", value=var, closed=closed_var))
    if w.kind in ("even", "odd") and n >= 2:
        am, av = cf.parity_asymptotics(w.kind, n)
        rows.append(_row("mean_cycles_asymptotic", value=mean, closed=am.value))
        rows.append(_row("variance_asymptotic", value=var, closed=av.value))
        if w.kind == "odd":
            am, av = cf.parity_asymptotics("odd", n, corrected=True)
            rows.append(_row("mean_cycles_asymptotic_corrected", value=mean, closed=am.value))
            rows.append(_row("variance_asymptotic_corrected", value=var, closed=av.value))
    return rows


def cmd_stats(args, out) -> int:
    w = parse_weights(args.weights)
    rows = stats_rows(w, args.n, args.mode)
    emit_table(rows, STATS_COLUMNS, args.format, out, {"weights": w.label, "n": args.n})
    return EXIT_OK


PROFILE_COLUMNS = ("n", "exact", "float", "limit", "gap")


def _limit_sigma(w: WeightSequence, override) -> float:
    if override is not None:
        return float(override)
    if w.mean is None:
        raise DomainError("weight mean unknown; pass --limit-sigma")
    return float(w.mean)


def cmd_profile(args, out) -> int:
    w = parse_weights(args.weights)
    g, d = egf.to_exact_real(args.gamma), egf.to_exact_real(args.delta)
    if not 0 <= g <= d <= 1:
        raise DomainError("need 0 <= gamma <= delta <= 1")
    if args.n < 1:
        raise DomainError("--n must be >= 1")
    theta = _limit_sigma(w, args.limit_sigma)
    limit = cf.bulk_profile_limit(theta, g, d)
    s = _series_for(w, args.n, args.mode)
    if s.coeffs[args.n] == 0:
        raise ZeroMeasure(f"no permutation of [{args.n}] has positive weight under {w.label}")
    ladder = sorted({args.n >> j for j in range(5)} - {0})
    rows = []
    for n in ladder:
        if s.coeffs[n] == 0:
            continue
        val = egf.bulk_profile_exact(s, n, g, d)
        rows.append({"n": str(n), "exact": render_exact(val) if s.exact else "",
                     "float": render_float(float(val)), "limit": render_float(limit),
                     "gap": render_float(abs(float(val) - limit))})
    emit_table(rows, PROFILE_COLUMNS, args.format, out,
               {"weights": w.label, "gamma": str(g), "delta": str(d), "limit_sigma": render_float(theta)})
    return EXIT_OK


# -- sampling ----------------------------------------------------------------------------

SAMPLE_CSV_COLUMNS = ("replicate", "n", "cycle_count", "max_cycle_len", "fixed_points")


def _moment_summary(report: StatReport, name: str, values: np.ndarray) -> tuple[float, float]:
    v = values.astype(float)
    r = len(v)
    mean = float(v.mean()) if r else float("nan")
    var = float(v.var(ddof=1)) if r > 1 else float("nan")
    se_mean = math.sqrt(var / r) if r > 1 else float("nan")
    c4 = float(((v - mean) ** 4).mean()) if r else float("nan")
    se_var = math.sqrt(max(c4 - var * var, 0.0) / r) if r > 1 else float("nan")
    report.add(f"{name}_mean", mean)
    report.add(f"{name}_mean_se", se_mean)
    report.add(f"{name}_var", var)
    report.add(f"{name}_var_se", se_var)
    return se_mean, se_var


def _z(report: StatReport, name: str, emp: float, ref, se: float) -> None:
    report.add(f"{name}_exact", ref)
    if se and se > 0 and math.isfinite(se):
        report.add(f"{name}_z", (emp - float(ref)) / se)


def _write_samples(path: str, lines: list[str]) -> None:
    text = "\n".join(lines) + ("\n" if lines else "")
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _sample_lines(images: np.ndarray | None, counts: np.ndarray, stats: dict | None,
                  n_col, fmt: str) -> list[str]:
    if fmt == "cycles":
        return [Permutation(tuple(row)).cycle_notation() for row in images]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SAMPLE_CSV_COLUMNS)
    for r in range(len(counts)):
        nval = n_col[r] if hasattr(n_col, "__len__") else n_col
        writer.writerow([r, int(nval), int(counts[r]),
                         "" if stats is None else int(stats["max_cycle_len"][r]),
                         "" if stats is None else int(stats["fixed_points"][r])])
    return buf.getvalue().rstrip("\n").split("\n")


def cmd_sample(args, out) -> int:
    w = parse_weights(args.weights)
    n, reps = args.n, args.reps
    if n < 1 or reps < 1:
        raise DomainError("--n and --reps must be >= 1")
    method = args.method
    if method == "boltzmann":
        raise DomainError("fixed-size Boltzmann sampling is not provided; use the 'boltzmann' command")
    if method == "crp":
        if w.kind != "ewens" or w.param <= 0:
            raise DomainError("crp sampling requires ewens weights with a positive parameter")
        draw = partial(samplers.crp_batch, w.param, n)
    elif method == "exact":
        s = _series_for(w, n, args.mode)
        if s.coeffs[n] == 0:
            raise ZeroMeasure(f"no permutation of [{n}] has positive weight under {w.label}")
        draw = partial(samplers.exact_weighted_batch, s, n)
    else:
        if w.kind == "ewens" and w.param > 0:
            draw = partial(samplers.bernoulli_count_batch, "ewens", n, theta=w.param)
        elif w.kind == "even":
            if n % 2:
                raise ZeroMeasure(f"no permutation of [{n}] has all cycles even")
            draw = partial(samplers.bernoulli_count_batch, "even", n)
        else:
            raise DomainError("bernoulli sampling requires ewens or even weights")
        if args.samples and args.sample_format == "cycles":
            raise UsageError("bernoulli draws are cycle counts; use --sample-format csv")
    result = samplers.run_replicates(draw, reps, args.seed, args.workers)

    report = StatReport()
    report.add("reps", reps)
    report.add("n", n)
    if method == "bernoulli":
        images, counts, stats = None, result, None
    else:
        images = result
        stats = samplers.cycle_stats(images)
        counts = stats["cycle_count"]
    se_m, se_v = _moment_summary(report, "cycle_count", counts)
    ref_series = egf.compute_series(w, n) if (w.kind != "ewens" or w.param > 0) else None
    if ref_series is not None and ref_series.coeffs[n] != 0:
        _z(report, "cycle_count_mean", report["cycle_count_mean"].approx,
           egf.total_cycles_mean(ref_series, n), se_m)
        _z(report, "cycle_count_var", report["cycle_count_var"].approx,
           egf.total_cycles_variance(ref_series, n), se_v)
    if images is not None and n <= oracle.PERMUTATION_CAP:
        res = verify.permutation_gof(images, oracle.permutation_measure(w, n))
        report.add("chi2_statistic", res.statistic)
        report.add("chi2_dof", res.dof)
        report.add("chi2_pvalue", res.pvalue)
        report.add("draws_outside_support", res.unexpected)
    elif images is None and n <= oracle.DEFAULT_CAP:
        poly = oracle.cycle_count_polynomial(w, n)
        total = sum(poly)
        res = verify.count_gof(counts, {c: q / total for c, q in enumerate(poly)})
        report.add("chi2_statistic", res.statistic)
        report.add("chi2_dof", res.dof)
        report.add("chi2_pvalue", res.pvalue)
    if args.samples:
        _write_samples(args.samples, _sample_lines(images, counts, stats, n, args.sample_format))
    emit_table(report.rows(), ("name", "exact", "approx"), args.format, out,
               {"weights": w.label, "method": method, "seed": args.seed})
    return EXIT_OK


def _boltzmann_chunk(weights: WeightSequence, x: float, emit_cycles: bool, count: int, gen):
    batch = samplers.boltzmann_batch(weights, x, count, gen)
    stats = np.zeros((count, 4), dtype=np.int64)
    stats[:, 0] = batch.sizes
    stats[:, 1] = batch.cycle_counts
    nonempty = np.flatnonzero(batch.cycle_counts > 0)
    if len(nonempty):
        starts = batch.offsets[:-1][nonempty]
        stats[nonempty, 2] = np.maximum.reduceat(batch.lengths, starts)
        stats[nonempty, 3] = np.add.reduceat((batch.lengths == 1).astype(np.int64), starts)
    lines = []
    if emit_cycles:
        lines = [samplers.assemble_permutation(batch.row(i), gen).cycle_notation()
                 for i in range(count)]
    return stats, lines


def cmd_boltzmann(args, out) -> int:
    w = parse_weights(args.weights)
    if (args.mu is None) == (args.x is None):
        raise UsageError("give exactly one of --mu and --x")
    if args.reps < 1:
        raise DomainError("--reps must be >= 1")
    x = samplers.calibrate_x(w, args.mu) if args.mu is not None else float(args.x)
    mean_n, mean_c, var_c = samplers.boltzmann_moments(w, x)
    emit_cycles = bool(args.samples) and args.sample_format == "cycles"
    chunk = partial(_boltzmann_chunk, w, x, emit_cycles)
    parts = []
    for c, start in enumerate(range(0, args.reps, samplers.CHUNK)):
        count = min(samplers.CHUNK, args.reps - start)
        parts.append(chunk(count, samplers.RngHandle(args.seed, c).generator()))
    stats = np.concatenate([p[0] for p in parts])
    report = StatReport()
    report.add("x", x)
    report.add("reps", args.reps)
    se_n, _ = _moment_summary(report, "size", stats[:, 0])
    _z(report, "size_mean", report["size_mean"].approx, mean_n, se_n)
    se_c, se_cv = _moment_summary(report, "cycle_count", stats[:, 1])
    _z(report, "cycle_count_mean", report["cycle_count_mean"].approx, mean_c, se_c)
    _z(report, "cycle_count_var", report["cycle_count_var"].approx, var_c, se_cv)
    if w.mean and args.mu is not None and args.mu > 1:
        report.add("cycle_ratio_to_alpha_log_mu",
                   report["cycle_count_mean"].approx / (float(w.mean) * math.log(args.mu)))
    if args.samples:
        if emit_cycles:
            lines = [ln for p in parts for ln in p[1]]
        else:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(SAMPLE_CSV_COLUMNS)
            for r, row in enumerate(stats):
                writer.writerow([r, *map(int, row)])
            lines = buf.getvalue().rstrip("\n").split("\n")
        _write_samples(args.samples, lines)
    emit_table(report.rows(), ("name", "exact", "approx"), args.format, out,
               {"weights": w.label, "seed": args.seed})
    return EXIT_OK


def cmd_measure(args, out) -> int:
    w = parse_weights(args.weights)
    table = oracle.enumerate_measure(w, args.n, cap=args.cap)
    if args.format == "json":
        rows = [dict(zip(oracle.MEASURE_COLUMNS, r)) for r in csv.reader(
            io.StringIO(oracle.measure_csv(table)))][1:]
        emit_table(rows, oracle.MEASURE_COLUMNS, "json", out,
                   {"weights": w.label, "total_weight": render_exact(table.total_weight)})
    else:
        out.write(oracle.measure_csv(table))
    return EXIT_OK


def cmd_verify(args, out) -> int:
    extra = list(args.weights or [])
    for spec in extra:
        parse_weights(spec)
    checks = verify.run_suite(n_max=args.n_max, draws=args.draws, seed=args.seed,
                              extra_weights=extra)
    doc = verify.report(checks)
    json.dump(doc, out, indent=2)
    out.write("\n")
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}", file=sys.stderr)
    print(f"{doc['total'] - doc['failures']}/{doc['total']} checks passed", file=sys.stderr)
    return EXIT_OK if doc["passed"] else EXIT_VERIFY


# -- parser ------------------------------------------------------------------------------

def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


def _seed(text: str) -> int:
    v = _nonneg_int(text)
    if v > samplers.UINT64_MAX:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="permprof",
                                description="Cycle statistics of cycle-weighted random permutations.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mode=True):
        sp.add_argument("--weights", required=True,
                        help="ewens:<p>/<q> | ewens:<int> | even | odd | mod:<a> | file:<path>")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        if mode:
            sp.add_argument("--mode", choices=egf.MODES, default=None,
                            help="series arithmetic (default: exact up to PERMPROF_NMAX_EXACT)")

    sp = sub.add_parser("series", help="normalising coefficients w(0..n)")
    common(sp)
    sp.add_argument("--n", type=_nonneg_int, required=True)
    sp.set_defaults(func=cmd_series)

    sp = sub.add_parser("stats", help="per-length and total cycle statistics")
    common(sp)
    sp.add_argument("--n", type=_nonneg_int, required=True)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("profile", help="bulk profile versus its limit law")
    common(sp)
    sp.add_argument("--n", type=_nonneg_int, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--limit-sigma", type=float, default=None)
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("sample", help="Monte Carlo permutations of fixed size")
    common(sp)
    sp.add_argument("--n", type=_nonneg_int, required=True)
    sp.add_argument("--method", choices=("crp", "exact", "bernoulli", "boltzmann"), default="exact")
    sp.add_argument("--reps", type=_nonneg_int, default=1000)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--workers", type=_nonneg_int, default=1)
    sp.add_argument("--samples", default=None, help="write draws to this path ('-' for stdout)")
    sp.add_argument("--sample-format", choices=("cycles", "csv"), default="cycles")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("boltzmann", help="Boltzmann-distributed permutations")
    common(sp, mode=False)
    sp.add_argument("--mu", type=float, default=None, help="target mean size")
    sp.add_argument("--x", type=float, default=None, help="Boltzmann parameter in (0, 1)")
    sp.add_argument("--reps", type=_nonneg_int, default=1000)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--samples", default=None)
    sp.add_argument("--sample-format", choices=("cycles", "csv"), default="csv")
    sp.set_defaults(func=cmd_boltzmann)

    sp = sub.add_parser("measure", help="brute-force measure table by cycle type")
    common(sp, mode=False)
    sp.add_argument("--n", type=_nonneg_int, required=True)
    sp.add_argument("--cap", type=_nonneg_int, default=oracle.DEFAULT_CAP)
    sp.set_defaults(func=cmd_measure)

    sp = sub.add_parser("verify", help="run the self-verification suite")
    sp.add_argument("--n-max", type=_nonneg_int, default=8)
    sp.add_argument("--draws", type=_nonneg_int, default=200_000)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--weights", action="append", help="extra weight spec to include")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, sys.stdout)
    except (InvalidSpec, UsageError) as exc:
        print(f"permprof: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ZeroMeasure, CapExceeded, CalibrationError, TailError,
            SeriesOverflow) as exc:
        print(f"permprof: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except BrokenPipeError:
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
