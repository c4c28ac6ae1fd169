"""Normalisation coefficients w(n) = [z^n] exp(sum sigma_k z^k / k) and the
moment statistics that are ratios of them.

Differentiating f = exp(g) gives the recurrence n w(n) = sum_k sigma_k w(n-k),
which is all we ever evaluate.  Exact mode keeps Fractions; float mode keeps
doubles and is meant for n in the thousands.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import WeightSequence, as_fraction, render_exact, render_float
from .errors import DomainError, InvalidSpec, SeriesOverflow, ZeroMeasure

DEFAULT_NMAX_EXACT = 500
MODES = ("exact", "float")


def exact_cap() -> int:
    """Largest N for which exact mode is chosen automatically.

    ``PERMPROF_NMAX_EXACT`` overrides the default of 500.
    """
    raw = os.environ.get("PERMPROF_NMAX_EXACT")
    if raw is None or raw.strip() == "":
        return DEFAULT_NMAX_EXACT
    try:
        cap = int(raw)
    except ValueError as exc:
        raise InvalidSpec(f"PERMPROF_NMAX_EXACT must be an integer, got {raw!r}") from exc
    if cap < 0:
        raise InvalidSpec("PERMPROF_NMAX_EXACT must be >= 0")
    return cap


@dataclass(frozen=True)
class WeightedSeries:
    weights: WeightSequence
    coeffs: tuple | np.ndarray
    mode: str

    @property
    def N(self) -> int:
        return len(self.coeffs) - 1

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def w(self, n: int):
        return self.coeffs[n]

    def total_weight(self, n: int):
        """W(n) = n! w(n), the summed weight of all permutations of [n]."""
        if self.exact:
            return math.factorial(n) * self.coeffs[n]
        return math.exp(math.lgamma(n + 1)) * float(self.coeffs[n])

    def residual(self, n: int):
        """n w(n) - sum_k sigma_k w(n-k); zero up to mode precision."""
        if self.exact:
            return n * self.coeffs[n] - sum(
                self.weights.sigma(k) * self.coeffs[n - k] for k in range(1, n + 1))
        sig = self.weights.sigma_array(n)
        w = np.asarray(self.coeffs)
        return n * w[n] - float(np.dot(sig[1:n + 1], w[n - 1::-1][:n]))


def compute_series(weights: WeightSequence, N: int, mode: str | None = None) -> WeightedSeries:
    """Coefficients w(0..N).  ``mode=None`` picks exact up to :func:`exact_cap`."""
    if N < 0:
        raise DomainError(f"N must be >= 0, got {N}")
    if mode is None:
        mode = "exact" if N <= exact_cap() else "float"
    if mode not in MODES:
        raise InvalidSpec(f"unknown series mode {mode!r}")
    if mode == "exact":
        return WeightedSeries(weights, tuple(_exact_coeffs(weights, N)), "exact")
    return WeightedSeries(weights, _float_coeffs(weights, N), "float")


def _exact_coeffs(weights: WeightSequence, N: int) -> list[Fraction]:
    sig = weights.sigmas(N)
    support = [k for k in range(1, N + 1) if sig[k] != 0]
    w = [Fraction(1)]
    for n in range(1, N + 1):
        acc = Fraction(0)
        for k in support:
            if k > n:
                break
            acc += sig[k] * w[n - k]
        w.append(acc / n)
    return w


def _float_coeffs(weights: WeightSequence, N: int) -> np.ndarray:
    sig = weights.sigma_array(N)
    w = np.zeros(N + 1)
    w[0] = 1.0
    for n in range(1, N + 1):
        # w[n-1::-1][:n] is w(n-1), ..., w(0)
        w[n] = np.dot(sig[1:n + 1], w[n - 1::-1][:n]) / n
    if not np.all(np.isfinite(w)):
        bad = int(np.argmin(np.isfinite(w)))
        raise SeriesOverflow(f"coefficient w({bad}) is not finite")
    w.setflags(write=False)
    return w


# -- statistics ----------------------------------------------------------------

def _check(series: WeightedSeries, n: int) -> None:
    if n < 0 or n > series.N:
        raise DomainError(f"n={n} outside the series range 0..{series.N}")
    if series.coeffs[n] == 0:
        raise ZeroMeasure(
            f"no permutation of [{n}] has positive weight under {series.weights.label}")


def _sig(series: WeightedSeries, k: int):
    s = series.weights.sigma(k)
    return s if series.exact else float(s)


def expected_k_cycles(series: WeightedSeries, n: int, k: int):
    """E X_k = (sigma_k / k) w(n-k) / w(n)."""
    _check(series, n)
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    w = series.coeffs
    if series.exact:
        return series.weights.sigma(k) / k * w[n - k] / w[n]
    return float(series.weights.sigma(k)) / k * float(w[n - k]) / float(w[n])


def expected_elements_in_k_cycles(series: WeightedSeries, n: int, k: int):
    """E Y_k = sigma_k w(n-k) / w(n)."""
    return k * expected_k_cycles(series, n, k)


def factorial_moment(series: WeightedSeries, n: int, spec: Sequence[tuple[int, int]]):
    """E prod_i (X_{k_i})_{m_i} for distinct lengths k_i.

    Equal to prod (sigma_k/k)^m * w(n - sum m k) / w(n), and zero when the
    requested cycles cannot fit into [n].
    """
    _check(series, n)
    ks = [k for k, _ in spec]
    if len(set(ks)) != len(ks):
        raise InvalidSpec("cycle lengths in a factorial-moment spec must be distinct")
    if any(k < 1 or m < 0 for k, m in spec):
        raise InvalidSpec("need k >= 1 and m >= 0 in every (k, m) pair")
    used = sum(k * m for k, m in spec)
    if used > n:
        return Fraction(0) if series.exact else 0.0
    w = series.coeffs
    if series.exact:
        out = Fraction(w[n - used], 1) / w[n]
        for k, m in spec:
            out *= (series.weights.sigma(k) / k) ** m
        return out
    out = float(w[n - used]) / float(w[n])
    for k, m in spec:
        out *= (float(series.weights.sigma(k)) / k) ** m
    return out


def _cycle_rates(series: WeightedSeries, n: int):
    """a_k = sigma_k / k for k = 0..n (a_0 = 0)."""
    if series.exact:
        return [Fraction(0)] + [series.weights.sigma(k) / k for k in range(1, n + 1)]
    sig = series.weights.sigma_array(n)
    a = np.zeros(n + 1)
    a[1:] = sig[1:] / np.arange(1, n + 1)
    return a


def total_cycles_mean(series: WeightedSeries, n: int):
    """E X, the expected total number of cycles."""
    _check(series, n)
    w = series.coeffs
    a = _cycle_rates(series, n)
    if series.exact:
        return sum((a[k] * w[n - k] for k in range(1, n + 1) if a[k]), Fraction(0)) / w[n]
    if n == 0:
        return 0.0
    return float(np.dot(a[1:], np.asarray(w)[n - 1::-1][:n]) / w[n])


def total_cycles_second_factorial(series: WeightedSeries, n: int):
    """E X(X-1), summed over ordered pairs of cycle lengths (j, k), j + k <= n."""
    _check(series, n)
    w = series.coeffs
    a = _cycle_rates(series, n)
    if series.exact:
        nz = [k for k in range(1, n + 1) if a[k]]
        acc = Fraction(0)
        for j in nz:
            aj = a[j]
            for k in nz:
                if j + k > n:
                    break
                acc += aj * a[k] * w[n - j - k]
        return acc / w[n]
    if n < 2:
        return 0.0
    conv = np.convolve(a, a)[:n + 1]
    return float(np.dot(conv[2:], np.asarray(w)[n - 2::-1][:n - 1]) / w[n])


def total_cycles_variance(series: WeightedSeries, n: int):
    """Var X = E X(X-1) + E X - (E X)^2."""
    mean = total_cycles_mean(series, n)
    return total_cycles_second_factorial(series, n) + mean - mean * mean


def to_exact_real(x) -> Fraction:
    """Exact value of a real argument; floats are read as their shortest decimal."""
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"not a finite real: {x}")
        return Fraction(repr(x))
    return as_fraction(x)


def profile_range(n: int, gamma, delta) -> range:
    """Cycle lengths k with gamma*n <= k <= delta*n and 1 <= k <= n."""
    g, d = to_exact_real(gamma), to_exact_real(delta)
    if not (0 <= g <= d <= 1):
        raise DomainError(f"need 0 <= gamma <= delta <= 1, got {gamma}, {delta}")
    lo = max(1, math.ceil(g * n))
    hi = min(n, math.floor(d * n))
    return range(lo, hi + 1)


def bulk_profile_exact(series: WeightedSeries, n: int, gamma, delta):
    """Probability that a uniform element sits in a cycle of length in [gamma n, delta n]."""
    _check(series, n)
    ks = profile_range(n, gamma, delta)
    if n == 0:
        return Fraction(0) if series.exact else 0.0
    w = series.coeffs
    if series.exact:
        acc = sum((series.weights.sigma(k) * w[n - k] for k in ks), Fraction(0))
        return acc / (n * w[n])
    if len(ks) == 0:
        return 0.0
    sig = series.weights.sigma_array(ks[-1])
    wa = np.asarray(w)
    kk = np.arange(ks[0], ks[-1] + 1)
    return float(np.dot(sig[kk], wa[n - kk]) / (n * wa[n]))


# -- export --------------------------------------------------------------------

SERIES_COLUMNS = ("n", "w_exact", "w_float")


def series_rows(series: WeightedSeries) -> list[dict[str, str]]:
    rows = []
    for n, c in enumerate(series.coeffs):
        rows.append({
            "n": str(n),
            "w_exact": render_exact(c) if series.exact else "",
            "w_float": render_float(float(c)),
        })
    return rows


def series_csv(series: WeightedSeries) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SERIES_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(series_rows(series))
    return buf.getvalue()
