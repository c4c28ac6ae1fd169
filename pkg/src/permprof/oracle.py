"""Brute-force ground truth by exhaustive enumeration.

Nothing here touches the generating-function recurrence: the measure is
built directly from integer partitions of n (cycle types) with the
classical class sizes n! / prod(k^c_k c_k!).  For sampler checks there is
also a permutation-level enumeration over all of S_n.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

from .core import CycleType, Permutation, WeightSequence, render_exact, weight
from .errors import CapExceeded, DomainError, ZeroMeasure

DEFAULT_CAP = 9
PERMUTATION_CAP = 6


def integer_partitions(n: int, largest: int | None = None) -> Iterator[list[int]]:
    """Partitions of n as non-increasing lists of parts."""
    if largest is None:
        largest = n
    if n == 0:
        yield []
        return
    for first in range(min(n, largest), 0, -1):
        for rest in integer_partitions(n - first, first):
            yield [first] + rest


@dataclass(frozen=True)
class TypeEntry:
    count: int
    weight: Fraction
    probability: Fraction


@dataclass(frozen=True)
class MeasureTable:
    n: int
    entries: dict[CycleType, TypeEntry]
    total_weight: Fraction

    def probability(self, t: CycleType) -> Fraction:
        e = self.entries.get(t)
        return e.probability if e else Fraction(0)


def _cap_check(n: int, cap: int) -> None:
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if n > cap:
        raise CapExceeded(f"n={n} exceeds the enumeration cap {cap}")


def enumerate_measure(weights: WeightSequence, n: int, cap: int = DEFAULT_CAP) -> MeasureTable:
    _cap_check(n, cap)
    raw = []
    for parts in integer_partitions(n):
        t = CycleType.from_lengths(parts)
        raw.append((t, t.multiplicity(), weight(weights, t)))
    total = sum((c * w for _, c, w in raw), Fraction(0))
    entries = {}
    for t, c, w in raw:
        p = c * w / total if total > 0 else Fraction(0)
        entries[t] = TypeEntry(c, w, p)
    return MeasureTable(n, entries, total)


def oracle_expectation(weights: WeightSequence, n: int,
                       functional: Callable[[CycleType], Fraction],
                       cap: int = DEFAULT_CAP) -> Fraction:
    table = enumerate_measure(weights, n, cap)
    if table.total_weight == 0:
        raise ZeroMeasure(f"no permutation of [{n}] has positive weight under {weights.label}")
    return sum((e.probability * Fraction(functional(t)) for t, e in table.entries.items()),
               Fraction(0))


def cycle_count_polynomial(weights: WeightSequence, n: int,
                           cap: int = DEFAULT_CAP) -> list[Fraction]:
    """Coefficient of u^c is the total weight of permutations of [n] with c cycles."""
    table = enumerate_measure(weights, n, cap)
    coeffs = [Fraction(0)] * (n + 1)
    for t, e in table.entries.items():
        coeffs[t.num_cycles] += e.count * e.weight
    return coeffs


def permutation_measure(weights: WeightSequence, n: int,
                        cap: int = PERMUTATION_CAP) -> dict[Permutation, Fraction]:
    """Probability of every permutation of [n] with positive weight, by listing S_n."""
    _cap_check(n, cap)
    ws = {}
    for img in itertools.permutations(range(1, n + 1)):
        p = Permutation(img)
        w = weight(weights, p.cycle_type())
        if w:
            ws[p] = w
    total = sum(ws.values(), Fraction(0))
    if total == 0:
        raise ZeroMeasure(f"no permutation of [{n}] has positive weight under {weights.label}")
    return {p: w / total for p, w in ws.items()}


# -- functionals -----------------------------------------------------------------

def k_cycles(k: int) -> Callable[[CycleType], int]:
    return lambda t: t.count(k)


def elements_in_k_cycles(k: int) -> Callable[[CycleType], int]:
    return lambda t: k * t.count(k)


def num_cycles(t: CycleType) -> int:
    return t.num_cycles


def num_cycles_squared(t: CycleType) -> int:
    return t.num_cycles ** 2


def profile_indicator(n: int, lo: int, hi: int) -> Callable[[CycleType], Fraction]:
    """Chance that a uniformly tagged element lies in a cycle of length lo..hi."""
    def f(t: CycleType) -> Fraction:
        return Fraction(sum(k * c for k, c in t.counts if lo <= k <= hi), n)
    return f


# -- export --------------------------------------------------------------------

MEASURE_COLUMNS = ("cycle_type", "count", "weight", "probability")


def measure_csv(table: MeasureTable) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=MEASURE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for t, e in table.entries.items():
        writer.writerow({"cycle_type": t.notation(), "count": e.count,
                         "weight": render_exact(e.weight),
                         "probability": render_exact(e.probability)})
    return buf.getvalue()
