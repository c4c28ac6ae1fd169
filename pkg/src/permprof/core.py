"""Domain types: weight sequences, permutations, cycle types and stat reports.

All weights are exact :class:`fractions.Fraction` values so that small-n
measure computations can be compared with ``==``.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DomainError, InvalidSpec

KINDS = ("ewens", "even", "odd", "mod", "explicit")
TAIL_RULES = ("zero", "repeat-last", "cycle")


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are rejected on purpose: a weight like 0.1 has no exact
    rational meaning the caller is likely to intend.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidSpec(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidSpec(f"not a rational: {value!r}") from exc
    raise InvalidSpec(f"not an exact rational: {value!r}")


@dataclass(frozen=True)
class WeightSequence:
    """The cycle weights k -> sigma_k selecting a measure on S_n.

    Use the constructors :meth:`ewens`, :meth:`even`, :meth:`odd`,
    :meth:`mod` and :meth:`explicit` rather than building one directly.
    """

    kind: str
    param: Fraction | None = None
    values: tuple[Fraction, ...] = ()
    tail: str = "zero"
    declared_mean: Fraction | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown weight kind {self.kind!r}")
        if self.kind == "ewens" and (self.param is None or self.param < 0):
            raise InvalidSpec("Ewens parameter must be a rational >= 0")
        if self.kind == "mod" and (self.param is None or self.param.denominator != 1
                                   or self.param < 1):
            raise InvalidSpec("mod:a needs a positive integer a")
        if self.kind == "explicit":
            if not self.values:
                raise InvalidSpec("explicit weights need at least one value")
            if any(v < 0 for v in self.values):
                raise InvalidSpec("weights must be nonnegative")
            if self.tail not in TAIL_RULES:
                raise InvalidSpec(f"unknown tail rule {self.tail!r}")

    @classmethod
    def ewens(cls, theta) -> "WeightSequence":
        return cls("ewens", param=as_fraction(theta))

    @classmethod
    def even(cls) -> "WeightSequence":
        return cls("even")

    @classmethod
    def odd(cls) -> "WeightSequence":
        return cls("odd")

    @classmethod
    def mod(cls, a: int) -> "WeightSequence":
        return cls("mod", param=Fraction(a))

    @classmethod
    def explicit(cls, values: Iterable, tail: str = "zero", mean=None) -> "WeightSequence":
        vals = tuple(as_fraction(v) for v in values)
        m = None if mean is None else as_fraction(mean)
        return cls("explicit", values=vals, tail=tail, declared_mean=m)

    def sigma(self, k: int) -> Fraction:
        """Weight of a k-cycle."""
        if k < 1:
            raise DomainError(f"cycle length must be >= 1, got {k}")
        kind = self.kind
        if kind == "ewens":
            return self.param
        if kind == "even":
            return Fraction(1) if k % 2 == 0 else Fraction(0)
        if kind == "odd":
            return Fraction(1) if k % 2 == 1 else Fraction(0)
        if kind == "mod":
            return Fraction(1) if k % int(self.param) == 0 else Fraction(0)
        vals = self.values
        if k <= len(vals):
            return vals[k - 1]
        if self.tail == "zero":
            return Fraction(0)
        if self.tail == "repeat-last":
            return vals[-1]
        return vals[(k - 1) % len(vals)]

    def sigmas(self, N: int) -> list[Fraction]:
        """``[0, sigma_1, ..., sigma_N]``; index 0 is a placeholder."""
        return [Fraction(0)] + [self.sigma(k) for k in range(1, N + 1)]

    def sigma_array(self, N: int) -> np.ndarray:
        """Float weights indexed 0..N (entry 0 is zero)."""
        k = np.arange(N + 1)
        if self.kind == "ewens":
            out = np.full(N + 1, float(self.param))
        elif self.kind == "even":
            out = (k % 2 == 0).astype(float)
        elif self.kind == "odd":
            out = (k % 2 == 1).astype(float)
        elif self.kind == "mod":
            out = (k % int(self.param) == 0).astype(float)
        else:
            vals = np.array([float(v) for v in self.values])
            L = len(vals)
            out = np.zeros(N + 1)
            head = min(N, L)
            out[1:head + 1] = vals[:head]
            if N > L:
                if self.tail == "repeat-last":
                    out[L + 1:] = vals[-1]
                elif self.tail == "cycle":
                    out[L + 1:] = vals[(k[L + 1:] - 1) % L]
        out[0] = 0.0
        return out

    @property
    def mean(self) -> Fraction | None:
        """Cesaro mean of the sequence when it is known."""
        if self.kind == "ewens":
            return self.param
        if self.kind in ("even", "odd"):
            return Fraction(1, 2)
        if self.kind == "mod":
            return 1 / self.param
        return self.declared_mean

    @property
    def sup(self) -> Fraction:
        """An upper bound on every sigma_k."""
        if self.kind == "ewens":
            return self.param
        if self.kind == "explicit":
            return max(self.values)
        return Fraction(1)

    @property
    def finite_support(self) -> int | None:
        """Largest k with sigma_k > 0 if the support is finite, else None."""
        if self.kind == "explicit" and self.tail == "zero":
            nz = [i + 1 for i, v in enumerate(self.values) if v > 0]
            return nz[-1] if nz else 0
        if self.kind == "explicit" and self.tail == "repeat-last" and self.values[-1] == 0:
            nz = [i + 1 for i, v in enumerate(self.values) if v > 0]
            return nz[-1] if nz else 0
        if self.kind == "explicit" and self.tail == "cycle" and max(self.values) == 0:
            return 0
        if self.kind == "ewens" and self.param == 0:
            return 0
        return None

    @property
    def label(self) -> str:
        """Weight-spec string that reproduces this sequence (explicit kinds excepted)."""
        if self.kind == "ewens":
            return f"ewens:{self.param}"
        if self.kind == "mod":
            return f"mod:{self.param}"
        if self.kind == "explicit":
            vals = ",".join(str(v) for v in self.values)
            return f"explicit[{vals};{self.tail}]"
        return self.kind


def sigma(weights: WeightSequence, k: int) -> Fraction:
    return weights.sigma(k)


def load_weight_file(path) -> WeightSequence:
    """Read a JSON weight document ``{"sigma": [...], "tail": ..., "mean": ...}``."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise InvalidSpec(f"weight file not found: {p}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidSpec(f"cannot read weight file {p}: {exc}") from exc
    if not isinstance(doc, dict) or "sigma" not in doc:
        raise InvalidSpec(f"weight file {p} lacks a 'sigma' list")
    vals = doc["sigma"]
    if not isinstance(vals, list):
        raise InvalidSpec("'sigma' must be a list")
    return WeightSequence.explicit(vals, tail=doc.get("tail", "zero"), mean=doc.get("mean"))


def parse_weights(spec: str) -> WeightSequence:
    """Parse ``ewens:<p>/<q>``, ``ewens:<int>``, ``even``, ``odd``, ``mod:<a>`` or ``file:<path>``."""
    s = spec.strip()
    if s == "even":
        return WeightSequence.even()
    if s == "odd":
        return WeightSequence.odd()
    head, sep, arg = s.partition(":")
    if not sep or not arg:
        raise InvalidSpec(f"unrecognised weight spec {spec!r}")
    if head == "ewens":
        return WeightSequence.ewens(as_fraction(arg))
    if head == "mod":
        try:
            a = int(arg)
        except ValueError as exc:
            raise InvalidSpec(f"mod needs an integer, got {arg!r}") from exc
        return WeightSequence.mod(a)
    if head == "file":
        return load_weight_file(arg)
    raise InvalidSpec(f"unrecognised weight spec {spec!r}")


@dataclass(frozen=True)
class CycleType:
    """Multiset of cycle lengths, stored as sorted ``(length, multiplicity)`` pairs."""

    counts: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for k, c in self.counts:
            if k < 1 or c < 1:
                raise DomainError(f"invalid cycle count entry ({k}, {c})")

    @classmethod
    def from_lengths(cls, lengths: Iterable[int]) -> "CycleType":
        return cls(tuple(sorted(Counter(lengths).items())))

    @classmethod
    def from_counts(cls, counts: Mapping[int, int]) -> "CycleType":
        return cls(tuple(sorted((k, c) for k, c in counts.items() if c > 0)))

    @property
    def n(self) -> int:
        return sum(k * c for k, c in self.counts)

    @property
    def num_cycles(self) -> int:
        return sum(c for _, c in self.counts)

    def count(self, k: int) -> int:
        return dict(self.counts).get(k, 0)

    def as_dict(self) -> dict[int, int]:
        return dict(self.counts)

    def lengths(self) -> list[int]:
        return [k for k, c in self.counts for _ in range(c)]

    def multiplicity(self) -> int:
        """Number of permutations of [n] with this cycle type."""
        denom = 1
        for k, c in self.counts:
            denom *= k ** c * math.factorial(c)
        return math.factorial(self.n) // denom

    def notation(self) -> str:
        return " ".join(f"{k}^{c}" for k, c in self.counts)

    def __str__(self) -> str:
        return self.notation() or "()"


def weight(weights: WeightSequence, t: CycleType) -> Fraction:
    """Product of sigma_k ** c_k; the empty type has weight 1."""
    w = Fraction(1)
    for k, c in t.counts:
        w *= weights.sigma(k) ** c
    return w


@dataclass(frozen=True)
class Permutation:
    """A bijection of {1..n} in one-line notation."""

    image: tuple[int, ...]

    def __post_init__(self):
        img = tuple(int(v) for v in self.image)
        object.__setattr__(self, "image", img)
        if sorted(img) != list(range(1, len(img) + 1)):
            raise DomainError(f"not a permutation of 1..{len(img)}: {img}")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> "Permutation":
        img = list(range(1, n + 1))
        for cyc in cycles:
            for i, a in enumerate(cyc):
                img[a - 1] = cyc[(i + 1) % len(cyc)]
        return cls(tuple(img))

    @property
    def n(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i - 1]

    def cycles(self) -> list[tuple[int, ...]]:
        """Cycles, each starting at its smallest element, ordered by that element."""
        seen = [False] * (self.n + 1)
        out = []
        for start in range(1, self.n + 1):
            if seen[start]:
                continue
            cyc = []
            j = start
            while not seen[j]:
                seen[j] = True
                cyc.append(j)
                j = self.image[j - 1]
            out.append(tuple(cyc))
        return out

    def cycle_type(self) -> CycleType:
        return CycleType.from_lengths(len(c) for c in self.cycles())

    def compose(self, other: "Permutation") -> "Permutation":
        """``self o other`` (apply ``other`` first)."""
        return Permutation(tuple(self.image[other.image[i] - 1] for i in range(self.n)))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, v in enumerate(self.image, start=1):
            inv[v - 1] = i
        return Permutation(tuple(inv))

    def cycle_notation(self) -> str:
        return "".join("(" + " ".join(map(str, c)) + ")" for c in self.cycles())

    def __str__(self) -> str:
        return self.cycle_notation()


def cycle_type(p: Permutation) -> CycleType:
    return p.cycle_type()


# -- rendering ---------------------------------------------------------------

def render_exact(q: Fraction | int | None) -> str:
    """Lowest-terms ``p/q`` with q > 0; integers render as ``p/1``."""
    if q is None:
        return ""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def render_float(x: float | None) -> str:
    if x is None:
        return ""
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class StatEntry:
    name: str
    exact: Fraction | None
    approx: float

    @classmethod
    def of(cls, name: str, value) -> "StatEntry":
        if isinstance(value, (Fraction, int)) and not isinstance(value, bool):
            q = Fraction(value)
            return cls(name, q, float(q))
        return cls(name, None, float(value))


@dataclass
class StatReport:
    """Named statistics carrying exact and decimal renderings."""

    entries: list[StatEntry] = field(default_factory=list)

    def add(self, name: str, value) -> None:
        self.entries.append(StatEntry.of(name, value))

    def __iter__(self) -> Iterator[StatEntry]:
        return iter(self.entries)

    def __getitem__(self, name: str) -> StatEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def rows(self) -> list[dict[str, str]]:
        return [{"name": e.name, "exact": render_exact(e.exact),
                 "approx": render_float(e.approx)} for e in self.entries]
