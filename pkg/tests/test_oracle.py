import math
from fractions import Fraction

import numpy as np
import pytest

from permprof import egf, oracle
from permprof.core import CycleType, WeightSequence, parse_weights
from permprof.errors import CapExceeded, ZeroMeasure

F = Fraction
BUILTIN = ("ewens:1/2", "ewens:1", "ewens:2", "ewens:5/2", "even", "odd", "mod:3")


def test_empty_measure():
    t = oracle.enumerate_measure(WeightSequence.even(), 0)
    assert list(t.entries) == [CycleType.from_counts({})]
    assert t.probability(CycleType.from_counts({})) == 1


def test_ewens_two_three():
    t = oracle.enumerate_measure(WeightSequence.ewens(2), 3)
    assert t.total_weight == 24
    by_type = {tp.notation(): e for tp, e in t.entries.items()}
    assert by_type["1^3"].count * by_type["1^3"].weight == 8
    assert by_type["1^1 2^1"].count == 3 and by_type["1^1 2^1"].weight == 4
    assert by_type["3^1"].count == 2 and by_type["3^1"].weight == 2


def test_even_four():
    t = oracle.enumerate_measure(WeightSequence.even(), 4)
    assert t.total_weight == 9
    assert t.probability(CycleType.from_counts({2: 2})) == F(1, 3)
    assert t.probability(CycleType.from_counts({4: 1})) == F(2, 3)


def test_cap():
    with pytest.raises(CapExceeded):
        oracle.enumerate_measure(WeightSequence.even(), 10)
    assert oracle.enumerate_measure(WeightSequence.even(), 12, cap=12).total_weight == 10395 ** 2
    with pytest.raises(CapExceeded):
        oracle.permutation_measure(WeightSequence.even(), 7)


@pytest.mark.parametrize("spec", BUILTIN)
@pytest.mark.parametrize("n", range(0, 10))
def test_table_invariants(spec, n):
    t = oracle.enumerate_measure(parse_weights(spec), n)
    assert sum(e.count for e in t.entries.values()) == math.factorial(n)
    if t.total_weight > 0:
        assert sum(e.probability for e in t.entries.values()) == 1


@pytest.mark.parametrize("spec", BUILTIN)
def test_total_weight_matches_series(spec):
    s = egf.compute_series(parse_weights(spec), 8, "exact")
    for n in range(1, 9):
        assert oracle.enumerate_measure(parse_weights(spec), n).total_weight == s.total_weight(n)


def test_expectation_examples():
    assert oracle.oracle_expectation(WeightSequence.ewens(1), 3, oracle.num_cycles) == F(11, 6)
    assert oracle.oracle_expectation(WeightSequence.even(), 4, oracle.elements_in_k_cycles(4)) == F(8, 3)
    assert oracle.oracle_expectation(WeightSequence.odd(), 3, oracle.k_cycles(1)) == 1


def test_expectation_zero_measure():
    with pytest.raises(ZeroMeasure):
        oracle.oracle_expectation(WeightSequence.even(), 5, oracle.num_cycles)


def test_polynomial_examples():
    assert oracle.cycle_count_polynomial(WeightSequence.even(), 4) == [0, 6, 3, 0, 0]
    assert oracle.cycle_count_polynomial(WeightSequence.ewens(1), 3) == [0, 2, 3, 1]


@pytest.mark.parametrize("theta", [F(1, 2), 2])
def test_polynomial_ewens_rising_factorial(theta):
    # u(u+1)...(u+n-1) with u^c weighted by theta^c
    n = 7
    poly = [F(1)]
    for j in range(n):
        nxt = [F(0)] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i + 1] += c * theta
            nxt[i] += c * j
        poly = nxt
    assert oracle.cycle_count_polynomial(WeightSequence.ewens(theta), n) == poly


def test_odd_polynomial_roots_imaginary():
    poly = oracle.cycle_count_polynomial(WeightSequence.odd(), 5)
    coeffs = [float(c) for c in poly]
    assert coeffs[0] == 0
    roots = np.roots(coeffs[1:][::-1])
    assert np.all(np.abs(roots.real) < 1e-8)


def test_permutation_measure_matches_types():
    w = WeightSequence.ewens(F(1, 2))
    pm = oracle.permutation_measure(w, 4)
    t = oracle.enumerate_measure(w, 4)
    by_type = {}
    for p, pr in pm.items():
        by_type[p.cycle_type()] = by_type.get(p.cycle_type(), 0) + pr
    assert all(by_type[tp] == e.probability for tp, e in t.entries.items())


def test_profile_indicator():
    f = oracle.profile_indicator(10, 3, 5)
    assert f(CycleType.from_lengths([4, 3, 2, 1])) == F(7, 10)


def test_measure_csv():
    text = oracle.measure_csv(oracle.enumerate_measure(WeightSequence.even(), 4))
    lines = text.strip().split("\n")
    assert lines[0] == "cycle_type,count,weight,probability"
    assert "4^1,6,1/1,2/3" in lines
    assert "2^2,3,1/1,1/3" in lines
