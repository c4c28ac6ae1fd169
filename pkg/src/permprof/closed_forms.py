"""Closed forms and asymptotic expansions for the named cycle statistics.

Exact formulas return Fractions or ints; anything involving log, psi or
fractional powers is double precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import as_fraction
from .errors import DomainError, ZeroMeasure

EULER_GAMMA = 0.57721566490153286061
LOG2 = math.log(2.0)

# Bernoulli-number coefficients of the large-x expansions.
_DIGAMMA_TERMS = (
    (2, 1 / 12), (4, -1 / 120), (6, 1 / 252), (8, -1 / 240), (10, 1 / 132),
    (12, -691 / 32760),
)
_TRIGAMMA_TERMS = (
    (3, 1 / 6), (5, -1 / 30), (7, 1 / 42), (9, -1 / 30), (11, 5 / 66),
    (13, -691 / 2730),
)
_SHIFT_TO = 10.0


@dataclass(frozen=True)
class AsymptoticEstimate:
    value: float
    claimed_error_order: str

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DomainError(f"asymptotic estimate is not finite: {self.value}")

    def __float__(self) -> float:
        return self.value


def digamma(x: float) -> float:
    """psi(x) for x > 0, via psi(x+1) = psi(x) + 1/x and the Stirling-type series."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"digamma needs x > 0, got {x}")
    shift = 0.0
    while x < _SHIFT_TO:
        shift += 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    p = 1.0
    for power, coef in _DIGAMMA_TERMS:
        p *= inv2
        series += coef * p
    return math.log(x) - 0.5 / x - series - shift


def trigamma(x: float) -> float:
    """psi'(x) for x > 0, via psi'(x+1) = psi'(x) - 1/x^2 and the asymptotic series."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"trigamma needs x > 0, got {x}")
    shift = 0.0
    while x < _SHIFT_TO:
        shift += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    p = inv
    for power, coef in _TRIGAMMA_TERMS:
        p *= inv2
        series += coef * p
    return inv + 0.5 * inv2 + series + shift


# -- Ewens ------------------------------------------------------------------------

def _check_theta(theta) -> float:
    t = float(theta)
    if not t > 0:
        raise DomainError(f"Ewens parameter must be > 0, got {theta}")
    return t


def _check_n(n: int) -> None:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")


def ewens_mean_cycles(theta, n: int) -> float:
    """theta (psi(n+theta) - psi(theta))."""
    t = _check_theta(theta)
    _check_n(n)
    return t * (digamma(n + t) - digamma(t))


def ewens_var_cycles(theta, n: int) -> float:
    """theta^2 (psi'(n+theta) - psi'(theta)) + theta (psi(n+theta) - psi(theta))."""
    t = _check_theta(theta)
    _check_n(n)
    return t * t * (trigamma(n + t) - trigamma(t)) + t * (digamma(n + t) - digamma(t))


def ewens_bernoulli_probs(theta, n: int) -> list[float]:
    """Success probabilities theta/(theta+k-1), k = 1..n, of the cycle-count summands."""
    t = _check_theta(theta)
    _check_n(n)
    return [t / (t + k - 1) for k in range(1, n + 1)]


def ewens_mean_cycles_asymptotic(theta: int, n: int) -> AsymptoticEstimate:
    """Integer theta: theta log n + theta(gamma - H_{theta-1}) + (theta^2 - theta/2)/n."""
    if int(theta) != theta or theta < 1:
        raise DomainError("the harmonic-number expansion needs a positive integer theta")
    _check_n(n)
    t = int(theta)
    h = sum(1.0 / j for j in range(1, t))
    v = t * math.log(n) + t * (EULER_GAMMA - h) + (t * t - t / 2) / n
    return AsymptoticEstimate(v, "O(n^-2)")


def ewens_var_cycles_asymptotic(theta, n: int) -> AsymptoticEstimate:
    """theta log n - theta^2 psi'(theta) - theta psi(theta) + (4 theta^2 - 1)/(2n)."""
    t = _check_theta(theta)
    _check_n(n)
    v = (t * math.log(n) - t * t * trigamma(t) - t * digamma(t)
         + (4 * t * t - 1) / (2 * n))
    return AsymptoticEstimate(v, "O(n^-2)")


def ewens_var_cycles_integer_explicit(theta: int, n: int) -> AsymptoticEstimate:
    """-theta^2 sum_{j=theta}^{theta+n-1} 1/j^2 + theta(log n + gamma - H_{theta-1})."""
    if int(theta) != theta or theta < 1:
        raise DomainError("the explicit variance formula needs a positive integer theta")
    _check_n(n)
    t = int(theta)
    sq = math.fsum(1.0 / (j * j) for j in range(t, t + n))
    h = sum(1.0 / j for j in range(1, t))
    return AsymptoticEstimate(-t * t * sq + t * (math.log(n) + EULER_GAMMA - h), "O(1/n)")


def falling(x, k: int):
    """Falling power x (x-1) ... (x-k+1); exact for exact input."""
    out = 1
    for i in range(k):
        out *= x - i
    return out


def ewens_k_cycle_mean(theta, n: int, k: int) -> Fraction:
    """(theta/k) (n)_k / (n+theta-1)_k, exactly."""
    t = as_fraction(theta)
    if t <= 0:
        raise DomainError(f"Ewens parameter must be > 0, got {theta}")
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    return t / k * Fraction(falling(n, k)) / falling(n + t - 1, k)


def ewens_k_cycle_mean_asymptotic(theta, n: int, k: int) -> AsymptoticEstimate:
    """(theta/k)(1 - (theta-1) k / n)."""
    t = _check_theta(theta)
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    return AsymptoticEstimate(t / k * (1 - (t - 1) * k / n), "O(n^-2)")


def ewens_long_cycle_limit(theta, alpha) -> float:
    """Limit of E Y_{alpha n}: theta (1 - alpha)^(theta - 1)."""
    t = _check_theta(theta)
    a = float(alpha)
    if not 0 < a <= 1:
        raise DomainError(f"need 0 < alpha <= 1, got {alpha}")
    if a == 1 and t < 1:
        raise DomainError("the limit is infinite at alpha = 1 when theta < 1")
    if a == 1 and t == 1:
        return 1.0
    return t * (1 - a) ** (t - 1)


# -- parity-constrained permutations ----------------------------------------------

PARITIES = ("even", "odd")


def _check_parity(parity: str) -> None:
    if parity not in PARITIES:
        raise DomainError(f"parity must be 'even' or 'odd', got {parity!r}")


def double_factorial(n: int) -> int:
    """n!! with (-1)!! = 0!! = 1."""
    if n < -1:
        raise DomainError(f"double factorial undefined for {n}")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def _stepped(start: int, count: int) -> int:
    """start (start-2) (start-4) ... with ``count`` factors."""
    out = 1
    for i in range(count):
        out *= start - 2 * i
    return out


def parity_elements_in_k_cycles(parity: str, n: int, k: int) -> Fraction:
    """E Y_k for permutations of [n] whose cycle lengths all have the given parity."""
    _check_parity(parity)
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    if parity == "even":
        if n % 2:
            raise ZeroMeasure(f"no permutation of [{n}] has all cycles even")
        if k % 2:
            return Fraction(0)
        h = k // 2
        return Fraction(_stepped(n, h), _stepped(n - 1, h))
    if k % 2 == 0:
        return Fraction(0)
    if n % 2 == 0:
        h = (k + 1) // 2
        return Fraction(_stepped(n, h), _stepped(n - 1, h))
    h = (k - 1) // 2
    return Fraction(_stepped(n - 1, h), _stepped(n - 2, h))


def parity_count(parity: str, n: int) -> tuple[Fraction, int]:
    """(w(n), W(n)): normalised coefficient and number of parity-constrained permutations."""
    _check_parity(parity)
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if parity == "even":
        W = double_factorial(n - 1) ** 2 if n % 2 == 0 else 0
    elif n % 2 == 0:
        W = double_factorial(n - 1) ** 2
    else:
        W = double_factorial(n) * double_factorial(n - 2)
    return Fraction(W, math.factorial(n)), W


def parity_k_cycle_asymptotic(parity: str, n: int, k: int) -> AsymptoticEstimate:
    """Two-term expansion of E Y_k for fixed k of the right parity."""
    _check_parity(parity)
    if k < 1 or n < k:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    if parity == "even":
        if n % 2 or k % 2:
            raise DomainError("even parity needs even n and even k")
        return AsymptoticEstimate(1 + k / (2 * n), "O(n^-2)")
    if k % 2 == 0:
        raise DomainError("odd parity needs odd k")
    if n % 2 == 0:
        return AsymptoticEstimate(1 + (k + 1) / (2 * n), "O(n^-2)")
    return AsymptoticEstimate(1 + (k - 1) / (2 * n), "O(n^-2)")


ODD_VARIANCE_CONSTANT_PRINTED = (EULER_GAMMA + 3 * LOG2 - 4 * math.pi ** 2) / 8
# log-PGF expansion: L'(1) + L''(1) with L''(1) = -psi'(1/2)/4 = -pi^2/8
ODD_VARIANCE_CONSTANT_DERIVED = (EULER_GAMMA + 3 * LOG2) / 2 - math.pi ** 2 / 8


def parity_asymptotics(parity: str, n: int, corrected: bool = False
                       ) -> tuple[AsymptoticEstimate, AsymptoticEstimate]:
    """(mean, variance) expansions of the cycle count for a parity-constrained
    permutation of size ``n``.

    For ``even`` the size must be even; the expansion is written in m = n/2.
    For ``odd`` the published constants are returned as printed unless
    ``corrected`` is set, which swaps the sign of the 1/n mean term and uses
    (gamma + 3 log 2)/2 - pi^2/8 for the variance constant; both versions are
    checked against the exact series in the test-suite.
    """
    _check_parity(parity)
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    if parity == "even":
        if n % 2:
            raise DomainError("even parity needs an even size")
        m = n // 2
        mean = 0.5 * math.log(m) + 0.5 * EULER_GAMMA + LOG2
        var = mean - math.pi ** 2 / 8
        return AsymptoticEstimate(mean, "O(1/n)"), AsymptoticEstimate(var, "O(1/n)")
    ln = math.log(n)
    sign = 1 if n % 2 else -1
    if corrected:
        sign = -sign
    mean = 0.5 * ln + (EULER_GAMMA + 3 * LOG2) / 2 + sign * (EULER_GAMMA + ln) / (8 * n)
    const = ODD_VARIANCE_CONSTANT_DERIVED if corrected else ODD_VARIANCE_CONSTANT_PRINTED
    return (AsymptoticEstimate(mean, "O(log n/n^2)"),
            AsymptoticEstimate(0.5 * ln + const, "O(log^2 n/n)"))


def even_cycle_count_pgf(n2: int) -> list[int]:
    """Coefficients of u(u+2)...(u+n2-2) * (n2-1)!!; entry c counts c-cycle permutations."""
    if n2 < 2 or n2 % 2:
        raise DomainError(f"need an even size >= 2, got {n2}")
    poly = [1]
    for j in range(n2 // 2):
        shift = 2 * j
        nxt = [0] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i + 1] += c
            nxt[i] += shift * c
        poly = nxt
    df = double_factorial(n2 - 1)
    return [c * df for c in poly]


def even_cycle_bernoulli_moments(n2: int) -> tuple[Fraction, Fraction]:
    """Exact (mean, variance) of the cycle count from the 1/(2k-1) Bernoulli summands."""
    if n2 < 2 or n2 % 2:
        raise DomainError(f"need an even size >= 2, got {n2}")
    ps = [Fraction(1, 2 * k - 1) for k in range(1, n2 // 2 + 1)]
    mean = sum(ps, Fraction(0))
    return mean, mean - sum((p * p for p in ps), Fraction(0))


# -- limit laws ------------------------------------------------------------------

def bulk_profile_limit(theta, gamma, delta) -> float:
    """(1 - gamma)^theta - (1 - delta)^theta."""
    t = _check_theta(theta)
    g, d = float(gamma), float(delta)
    if not (0 <= g <= d <= 1):
        raise DomainError(f"need 0 <= gamma <= delta <= 1, got {gamma}, {delta}")
    return (1 - g) ** t - (1 - d) ** t


def even_bulk_scaling(n: int, k: int) -> float:
    """Large-n form (1 - k/n)^(-1/2) of E Y_k for all-even permutations."""
    if n % 2 or k % 2:
        raise DomainError("even_bulk_scaling needs even n and k")
    if not 0 < k < n:
        raise DomainError(f"need 0 < k/n < 1, got k={k}, n={n}")
    return (1 - k / n) ** -0.5
