"""The self-verification suite behind ``permprof verify``.

Each check compares two independently computed quantities and records a
pass/fail verdict with a short detail string.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy.stats import chisquare

from . import closed_forms as cf
from . import egf, oracle, samplers
from .core import Permutation, WeightSequence, parse_weights

SIGNIFICANCE = 1e-3
DEFAULT_WEIGHTS = ("ewens:1/2", "ewens:1", "ewens:2", "ewens:5/2", "even", "odd", "mod:3")
PROFILE_WINDOWS = ((Fraction(0), Fraction(1)), (Fraction(3, 10), Fraction(7, 10)),
                   (Fraction(1, 2), Fraction(1)))


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class GofResult:
    statistic: float
    dof: int
    pvalue: float
    draws: int
    unexpected: int

    @property
    def passed(self) -> bool:
        return self.unexpected == 0 and self.pvalue > SIGNIFICANCE


def permutation_gof(images: np.ndarray, measure: dict[Permutation, Fraction]) -> GofResult:
    """Pearson chi-square of sampled permutations against exact probabilities.

    Draws outside the support are counted separately and fail the test outright.
    """
    codes = samplers.perm_codes(images)
    uniq, counts = np.unique(codes, return_counts=True)
    observed = dict(zip(uniq.tolist(), counts.tolist()))
    draws = int(len(codes))
    obs, exp = [], []
    for p, prob in measure.items():
        c = samplers.perm_code(p)
        obs.append(observed.pop(c, 0))
        exp.append(float(prob) * draws)
    unexpected = sum(observed.values())
    exp_arr = np.array(exp)
    exp_arr *= sum(obs) / exp_arr.sum() if sum(obs) else 1.0
    if len(obs) < 2:
        return GofResult(0.0, 0, 1.0, draws, unexpected)
    stat, p = chisquare(obs, exp_arr)
    return GofResult(float(stat), len(obs) - 1, float(p), draws, unexpected)


def count_gof(values: np.ndarray, probs: dict[int, Fraction]) -> GofResult:
    """Pearson chi-square for integer-valued draws (e.g. cycle counts)."""
    draws = int(len(values))
    uniq, counts = np.unique(values, return_counts=True)
    observed = dict(zip(uniq.tolist(), counts.tolist()))
    obs, exp = [], []
    for v, prob in probs.items():
        if prob == 0:
            continue
        obs.append(observed.pop(v, 0))
        exp.append(float(prob) * draws)
    unexpected = sum(observed.values())
    if len(obs) < 2:
        return GofResult(0.0, 0, 1.0, draws, unexpected)
    exp_arr = np.array(exp) * (sum(obs) / sum(exp))
    stat, p = chisquare(obs, exp_arr)
    return GofResult(float(stat), len(obs) - 1, float(p), draws, unexpected)


def boltzmann_conditioned(weights: WeightSequence, x, n: int, reps: int, seed: int) -> np.ndarray:
    """One-line images of Boltzmann draws that landed on size n (out of ``reps``)."""
    images = []
    for c, start in enumerate(range(0, reps, samplers.CHUNK)):
        count = min(samplers.CHUNK, reps - start)
        gen = samplers.RngHandle(seed, c).generator()
        batch = samplers.boltzmann_batch(weights, x, count, gen)
        for i in np.flatnonzero(batch.sizes == n):
            images.append(samplers.assemble_permutation(batch.row(i), gen).image)
    return np.array(images, dtype=np.int64).reshape(-1, n)


# -- individual suites --------------------------------------------------------------

def _oracle_bundle(spec: str, w: WeightSequence, series: egf.WeightedSeries, n: int) -> Check:
    table = oracle.enumerate_measure(w, n)
    bad = []
    if table.total_weight != series.total_weight(n):
        bad.append("total weight")
    if table.total_weight > 0:
        for k in range(1, n + 1):
            if egf.expected_k_cycles(series, n, k) != oracle.oracle_expectation(w, n, oracle.k_cycles(k)):
                bad.append(f"E X_{k}")
            if egf.expected_elements_in_k_cycles(series, n, k) != oracle.oracle_expectation(
                    w, n, oracle.elements_in_k_cycles(k)):
                bad.append(f"E Y_{k}")
        mean = oracle.oracle_expectation(w, n, oracle.num_cycles)
        if egf.total_cycles_mean(series, n) != mean:
            bad.append("mean")
        var = oracle.oracle_expectation(w, n, oracle.num_cycles_squared) - mean ** 2
        if egf.total_cycles_variance(series, n) != var:
            bad.append("variance")
        for g, d in PROFILE_WINDOWS:
            ks = egf.profile_range(n, g, d)
            lo, hi = (ks[0], ks[-1]) if len(ks) else (1, 0)
            ref = oracle.oracle_expectation(w, n, oracle.profile_indicator(n, lo, hi))
            if egf.bulk_profile_exact(series, n, g, d) != ref:
                bad.append(f"profile[{g},{d}]")
    poly = oracle.cycle_count_polynomial(w, n)
    if sum(poly) != series.total_weight(n):
        bad.append("polynomial")
    elif table.total_weight > 0:
        pm = sum(c * a for c, a in enumerate(poly)) / sum(poly)
        p2 = sum(c * c * a for c, a in enumerate(poly)) / sum(poly)
        if pm != egf.total_cycles_mean(series, n) or p2 - pm ** 2 != egf.total_cycles_variance(series, n):
            bad.append("polynomial moments")
    return Check(f"oracle[{spec}, n={n}]", not bad, ", ".join(bad) or "exact match")


def oracle_checks(specs: Iterable[str], n_max: int) -> list[Check]:
    out = []
    for spec in specs:
        w = parse_weights(spec) if isinstance(spec, str) else spec
        label = spec if isinstance(spec, str) else w.label
        series = egf.compute_series(w, max(n_max, 1), mode="exact")
        for n in range(1, n_max + 1):
            out.append(_oracle_bundle(label, w, series, n))
        resid = [series.residual(n) for n in range(1, series.N + 1)]
        out.append(Check(f"recurrence[{label}]", all(r == 0 for r in resid), "n w(n) = sum sigma_k w(n-k)"))
        complete = all(
            sum(egf.expected_elements_in_k_cycles(series, n, k) for k in range(1, n + 1)) == n
            for n in range(1, n_max + 1) if series.coeffs[n] != 0)
        out.append(Check(f"completeness[{label}]", complete, "sum_k E Y_k = n"))
    return out


def closed_form_checks(n_max: int) -> list[Check]:
    out = []
    for theta in (Fraction(1, 2), Fraction(1), Fraction(2), Fraction(5, 2)):
        w = WeightSequence.ewens(theta)
        s = egf.compute_series(w, max(n_max, 1), mode="exact")
        gap_m = max(abs(cf.ewens_mean_cycles(theta, n) - float(egf.total_cycles_mean(s, n)))
                    for n in range(1, n_max + 1))
        gap_v = max(abs(cf.ewens_var_cycles(theta, n) - float(egf.total_cycles_variance(s, n)))
                    for n in range(1, n_max + 1))
        out.append(Check(f"ewens_mean_digamma[{theta}]", gap_m <= 1e-9, f"max gap {gap_m:.3g}"))
        out.append(Check(f"ewens_var_trigamma[{theta}]", gap_v <= 1e-9, f"max gap {gap_v:.3g}"))
        ok = all(cf.ewens_k_cycle_mean(theta, n, k) == egf.expected_k_cycles(s, n, k)
                 for n in range(1, n_max + 1) for k in range(1, n + 1))
        out.append(Check(f"ewens_falling_power[{theta}]", ok, "exact"))
    for parity in ("even", "odd"):
        w = parse_weights(parity)
        s = egf.compute_series(w, max(n_max, 1), mode="exact")
        ok = True
        for n in range(1, n_max + 1):
            wn, W = cf.parity_count(parity, n)
            ok &= wn == s.coeffs[n] and W == s.total_weight(n)
            if s.coeffs[n] == 0:
                continue
            for k in range(1, n + 1):
                ok &= cf.parity_elements_in_k_cycles(parity, n, k) == \
                    egf.expected_elements_in_k_cycles(s, n, k)
        out.append(Check(f"parity_products[{parity}]", bool(ok), "exact"))
    return out


def pgf_checks(n_max: int) -> list[Check]:
    out = []
    w = WeightSequence.even()
    for n2 in range(2, n_max + 1, 2):
        poly = cf.even_cycle_count_pgf(n2)
        ref = oracle.cycle_count_polynomial(w, n2)
        out.append(Check(f"even_pgf[{n2}]", [Fraction(c) for c in poly] == ref[:len(poly)], "exact"))
    top = max(12, n_max + n_max % 2)
    s = egf.compute_series(w, top, mode="exact")
    for n2 in range(2, top + 1, 2):
        mean, var = cf.even_cycle_bernoulli_moments(n2)
        ok = mean == egf.total_cycles_mean(s, n2) and var == egf.total_cycles_variance(s, n2)
        out.append(Check(f"even_bernoulli[{n2}]", ok, "exact"))
    return out


def sampler_checks(draws: int, seed: int, n_max: int) -> list[Check]:
    out = []

    def record(name: str, res: GofResult) -> None:
        out.append(Check(name, res.passed,
                         f"chi2={res.statistic:.2f} dof={res.dof} p={res.pvalue:.4g} "
                         f"draws={res.draws} outside_support={res.unexpected}"))

    stream = 0
    n4 = min(4, max(n_max, 2))
    for theta in (Fraction(1), Fraction(1, 2)):
        w = WeightSequence.ewens(theta)
        imgs = samplers.crp_batch(theta, n4, draws, samplers.RngHandle(seed, stream))
        stream += 1
        record(f"crp[{theta}, n={n4}]", permutation_gof(imgs, oracle.permutation_measure(w, n4)))
    for spec, n in (("even", n4 if n4 % 2 == 0 else 2), ("odd", min(5, max(n_max, 1))),
                    ("ewens:1/2", n4)):
        w = parse_weights(spec)
        s = egf.compute_series(w, n, mode="exact")
        imgs = samplers.exact_weighted_batch(s, n, draws, samplers.RngHandle(seed, stream))
        stream += 1
        record(f"exact_sampler[{spec}, n={n}]", permutation_gof(imgs, oracle.permutation_measure(w, n)))
    for family, theta, n in (("ewens", Fraction(1, 2), n4), ("even", None, 4)):
        w = WeightSequence.ewens(theta) if family == "ewens" else WeightSequence.even()
        counts = samplers.bernoulli_count_batch(family, n, draws, samplers.RngHandle(seed, stream),
                                                theta=theta)
        stream += 1
        poly = oracle.cycle_count_polynomial(w, n)
        total = sum(poly)
        record(f"bernoulli[{family}, n={n}]", count_gof(counts, {c: q / total for c, q in enumerate(poly)}))
    w = WeightSequence.ewens(1)
    imgs = boltzmann_conditioned(w, 0.5, n4, 16 * draws, seed + 1)
    record(f"boltzmann_conditioned[ewens:1, x=1/2, N={n4}]",
           permutation_gof(imgs, oracle.permutation_measure(w, n4)))
    return out


def run_suite(n_max: int = 8, draws: int = 200_000, seed: int = 0,
              extra_weights: Iterable = ()) -> list[Check]:
    specs = list(DEFAULT_WEIGHTS) + list(extra_weights)
    checks = oracle_checks(specs, n_max)
    checks += closed_form_checks(n_max)
    checks += pgf_checks(n_max)
    if draws > 0:
        checks += sampler_checks(draws, seed, n_max)
    return checks


def report(checks: list[Check]) -> dict:
    return {
        "passed": all(c.passed for c in checks),
        "total": len(checks),
        "failures": sum(not c.passed for c in checks),
        "checks": [asdict(c) for c in checks],
    }
