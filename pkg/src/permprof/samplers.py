"""Exact samplers for weighted permutations and their cycle counts.

Every sampler has a batch form working on ``(reps, n)`` integer arrays of
one-line images (1-based) and a single-draw form returning a
:class:`~permprof.core.Permutation`.  Randomness comes from
:class:`RngHandle`: a Philox counter-based generator keyed by
``SeedSequence(master_seed, spawn_key=(stream_index,))``, so a
(seed, stream) pair always reproduces the same stream and distinct streams
are independent.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .core import Permutation, WeightSequence
from .egf import WeightedSeries
from .errors import CalibrationError, DomainError, TailError, ZeroMeasure

UINT64_MAX = (1 << 64) - 1
# Replicates drawn from one stream; chunk c of a run uses stream_index c.
CHUNK = 1 << 16
TAIL_MASS = 1e-12
MAX_CUTOFF = 20_000_000
MOMENT_RTOL = 1e-13


@dataclass(frozen=True)
class RngHandle:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not 0 <= v <= UINT64_MAX:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {v}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngHandle):
        return rng.generator()
    raise TypeError(f"expected RngHandle or numpy Generator, got {type(rng).__name__}")


def run_replicates(draw: Callable[[int, np.random.Generator], np.ndarray],
                   reps: int, seed: int, workers: int = 1) -> np.ndarray:
    """Run ``draw(count, gen)`` over chunks of CHUNK replicates and stack the results.

    Chunk c always uses stream c, so the output does not depend on ``workers``.
    ``draw`` must be picklable when ``workers > 1``.
    """
    if reps < 0:
        raise DomainError(f"reps must be >= 0, got {reps}")
    sizes = [min(CHUNK, reps - s) for s in range(0, reps, CHUNK)]
    if workers > 1 and len(sizes) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [draw] * len(sizes), sizes,
                                  [seed] * len(sizes), range(len(sizes))))
    else:
        parts = [_run_chunk(draw, c, seed, i) for i, c in enumerate(sizes)]
    if not parts:
        return np.empty(0)
    return np.concatenate(parts, axis=0)


def _run_chunk(draw, count: int, seed: int, index: int):
    return draw(count, RngHandle(seed, index).generator())


# -- batch helpers -------------------------------------------------------------------

def perm_codes(images: np.ndarray) -> np.ndarray:
    """Injective integer code of each row of a batch of one-line images."""
    reps, n = images.shape
    if n == 0:
        return np.zeros(reps, dtype=np.int64)
    base = np.int64(n) ** np.arange(n, dtype=np.int64)
    return ((images - 1).astype(np.int64) * base).sum(axis=1)


def perm_code(p: Permutation) -> int:
    return int(perm_codes(np.array([p.image]))[0]) if p.n else 0


def cycle_stats(images: np.ndarray) -> dict[str, np.ndarray]:
    """Per-row cycle count, longest cycle and number of fixed points."""
    reps, n = images.shape
    if n == 0:
        z = np.zeros(reps, dtype=np.int64)
        return {"cycle_count": z, "max_cycle_len": z.copy(), "fixed_points": z.copy()}
    p = images - 1
    idx = np.arange(n)
    low = np.broadcast_to(idx, p.shape).copy()
    jump = p.copy()
    steps = 1
    # pointer doubling: after t rounds ``low`` is the minimum over 2^t orbit points
    while steps < n:
        low = np.minimum(low, np.take_along_axis(low, jump, axis=1))
        jump = np.take_along_axis(jump, jump, axis=1)
        steps *= 2
    cycles = (low == idx).sum(axis=1)
    flat = (low + (np.arange(reps) * n)[:, None]).ravel()
    sizes = np.bincount(flat, minlength=reps * n).reshape(reps, n)
    return {
        "cycle_count": cycles,
        "max_cycle_len": sizes.max(axis=1),
        "fixed_points": (p == idx).sum(axis=1),
    }


def cycle_counts(images: np.ndarray) -> np.ndarray:
    return cycle_stats(images)["cycle_count"]


# -- Chinese restaurant process ---------------------------------------------------------

def crp_batch(theta, n: int, reps: int, rng) -> np.ndarray:
    """Ewens(theta) permutations by sequential insertion, one per row."""
    t = float(theta)
    if not t > 0:
        raise DomainError(f"CRP needs theta > 0, got {theta}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    gen = as_generator(rng)
    perm = np.empty((reps, n), dtype=np.int64)
    perm[:, 0] = 0
    rows = np.arange(reps)
    u = gen.random((reps, n))
    for i in range(1, n):
        # element i+1 has i predecessors: each is chosen w.p. 1/(t+i), a new cycle w.p. t/(t+i)
        v = u[:, i] * (t + i)
        join = v < i
        j = np.minimum(v.astype(np.int64), i - 1)
        r, jj = rows[join], j[join]
        perm[:, i] = i
        perm[r, i] = perm[r, jj]
        perm[r, jj] = i
    return perm + 1


def crp_sample(theta, n: int, rng) -> Permutation:
    return Permutation(tuple(crp_batch(theta, n, 1, rng)[0]))


# -- exact recursive sampler ---------------------------------------------------------------

def _first_cycle_cdf(series: WeightedSeries, m: int) -> np.ndarray:
    """CDF over k of the length of the cycle holding the smallest of m labels."""
    w = series.coeffs
    if series.exact:
        probs = [float(series.weights.sigma(k) * w[m - k] / (m * w[m])) for k in range(1, m + 1)]
        cdf = np.cumsum(probs)
    else:
        sig = series.weights.sigma_array(m)
        wa = np.asarray(w, dtype=float)
        cdf = np.cumsum(sig[1:m + 1] * wa[m - 1::-1][:m])
    return cdf / cdf[-1]


def exact_weighted_batch(series: WeightedSeries, n: int, reps: int, rng) -> np.ndarray:
    """Draw from P_sigma^(n) by peeling off the cycle of the smallest remaining label."""
    if not 0 <= n <= series.N:
        raise DomainError(f"n={n} outside the series range 0..{series.N}")
    if series.coeffs[n] == 0:
        raise ZeroMeasure(f"no permutation of [{n}] has positive weight under {series.weights.label}")
    gen = as_generator(rng)
    perm = np.empty((reps, n), dtype=np.int64)
    used = np.zeros((reps, n), dtype=bool)
    remaining = np.full(reps, n)
    rows = np.arange(reps)
    cdfs: dict[int, np.ndarray] = {}
    while True:
        active = remaining > 0
        if not active.any():
            break
        u = 1.0 - gen.random(reps)
        k = np.zeros(reps, dtype=np.int64)
        for m in np.unique(remaining[active]):
            cdf = cdfs.get(m)
            if cdf is None:
                cdf = cdfs[m] = _first_cycle_cdf(series, int(m))
            sel = remaining == m
            k[sel] = np.minimum(np.searchsorted(cdf, u[sel], side="left"), m - 1) + 1
        keys = gen.random((reps, n))
        keys[used] = np.inf
        anchor = np.argmin(used, axis=1)
        keys[rows, anchor] = -np.inf
        # anchor first, then a uniformly ordered sample of the other free labels
        order = np.argsort(keys, axis=1)
        for j in range(int(k.max())):
            mask = active & (j < k)
            if not mask.any():
                break
            nxt = np.where(j + 1 < k, order[:, min(j + 1, n - 1)], anchor)
            r = rows[mask]
            src = order[mask, j]
            perm[r, src] = nxt[mask]
            used[r, src] = True
        remaining = remaining - np.where(active, k, 0)
    return perm + 1


def exact_weighted_sample(series: WeightedSeries, n: int, rng) -> Permutation:
    return Permutation(tuple(exact_weighted_batch(series, n, 1, rng)[0]))


# -- Bernoulli decompositions ---------------------------------------------------------------

def _bernoulli_probs(family: str, n: int, theta=None) -> np.ndarray:
    if family == "ewens":
        t = float(theta) if theta is not None else float("nan")
        if not t > 0:
            raise DomainError(f"ewens family needs theta > 0, got {theta}")
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        return t / (t + np.arange(n))
    if family == "even":
        if n < 2 or n % 2:
            raise DomainError(f"even family needs an even n >= 2, got {n}")
        return 1.0 / (2 * np.arange(1, n // 2 + 1) - 1)
    raise DomainError(f"unknown Bernoulli family {family!r}")


def bernoulli_count_batch(family: str, n: int, reps: int, rng, theta=None) -> np.ndarray:
    """Cycle counts drawn as sums of independent Bernoulli variables."""
    p = _bernoulli_probs(family, n, theta)
    gen = as_generator(rng)
    out = np.empty(reps, dtype=np.int64)
    step = max(1, (1 << 22) // max(1, len(p)))
    for s in range(0, reps, step):
        e = min(reps, s + step)
        out[s:e] = (gen.random((e - s, len(p))) < p).sum(axis=1)
    return out


def bernoulli_count_sample(family: str, n: int, rng, theta=None) -> int:
    return int(bernoulli_count_batch(family, n, 1, rng, theta)[0])


# -- Boltzmann --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoltzmannDraw:
    permutation: Permutation
    size: int
    cycle_count: int


@dataclass(frozen=True)
class BoltzmannBatch:
    """Cycle lengths of ``reps`` Boltzmann draws, flattened with row offsets."""
    lengths: np.ndarray
    offsets: np.ndarray

    @property
    def reps(self) -> int:
        return len(self.offsets) - 1

    @property
    def sizes(self) -> np.ndarray:
        csum = np.concatenate([[0], np.cumsum(self.lengths)])
        return csum[self.offsets[1:]] - csum[self.offsets[:-1]]

    @property
    def cycle_counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def row(self, i: int) -> np.ndarray:
        return self.lengths[self.offsets[i]:self.offsets[i + 1]]


def _check_x(x) -> float:
    xf = float(x)
    if not 0 < xf < 1:
        raise DomainError(f"Boltzmann parameter must lie in (0, 1), got {x}")
    return xf


def _tail_bound(sup: float, x: float, K: int) -> float:
    """Upper bound on sum_{k>K} sigma_k x^k / k for sigma_k <= sup."""
    return sup * math.exp((K + 1) * math.log(x)) / ((K + 1) * (1 - x))


def _rates(weights: WeightSequence, x: float, lo: int, hi: int) -> np.ndarray:
    """lambda_k = sigma_k x^k / k for k = lo..hi."""
    k = np.arange(lo, hi + 1)
    sig = weights.sigma_array(hi)[lo:]
    return sig * np.exp(k * math.log(x)) / k


@dataclass(frozen=True)
class _Plan:
    cutoff: int
    inner: float
    cdf: np.ndarray
    tail: float


@lru_cache(maxsize=64)
def _boltzmann_plan(weights: WeightSequence, x: float) -> _Plan:
    support = weights.finite_support
    sup = float(weights.sup)
    if support is not None:
        K, tail = max(support, 1), 0.0
    else:
        lx = math.log(x)
        # smallest K with sup x^(K+1) / ((K+1)(1-x)) below TAIL_MASS
        K = max(1, int(math.ceil(math.log(TAIL_MASS * (1 - x) / max(sup, 1e-300)) / lx)))
        while K > 1 and _tail_bound(sup, x, K - 1) < TAIL_MASS:
            K -= 1
        while _tail_bound(sup, x, K) >= TAIL_MASS:
            K += 1
        if K > MAX_CUTOFF:
            raise TailError(f"tail mass at x={x} needs {K} cycle lengths (cap {MAX_CUTOFF})")
        tail = _tail_sum(weights, x, K, sup)
    lam = _rates(weights, x, 1, K)
    cdf = np.cumsum(lam)
    inner = float(cdf[-1])
    if inner > 0:
        cdf = cdf / inner
    return _Plan(K, inner, cdf, tail)


def _tail_sum(weights: WeightSequence, x: float, K: int, sup: float) -> float:
    total, lo = 0.0, K + 1
    width = max(1024, int(4 / (1 - x)))
    while True:
        hi = lo + width - 1
        total += float(_rates(weights, x, lo, hi).sum())
        if _tail_bound(sup, x, hi) <= 1e-6 * total or _tail_bound(sup, x, hi) < 1e-300:
            return total
        lo = hi + 1
        if lo > 4 * MAX_CUTOFF:
            raise TailError("tail mass did not converge")


def _tail_lengths(weights: WeightSequence, x: float, plan: _Plan, count: int,
                  gen: np.random.Generator) -> list[int]:
    """Lengths beyond the cutoff, distributed proportionally to lambda_k."""
    out = []
    for _ in range(count):
        target = (1.0 - gen.random()) * plan.tail
        k, acc = plan.cutoff, 0.0
        while acc < target:
            k += 1
            acc += float(weights.sigma(k)) * math.exp(k * math.log(x)) / k
            if k > 4 * MAX_CUTOFF:
                raise TailError("tail length search did not terminate")
        out.append(k)
    return out


def _truncated_poisson(lam: float, gen: np.random.Generator) -> int:
    """Poisson(lam) conditioned on being >= 1, by inversion."""
    u = gen.random() * -math.expm1(-lam)
    j, p = 1, math.exp(-lam) * lam
    acc = p
    while acc < u:
        j += 1
        p *= lam / j
        acc += p
    return j


def boltzmann_batch(weights: WeightSequence, x, reps: int, rng) -> BoltzmannBatch:
    """Cycle lengths of Boltzmann-distributed permutations.

    Independent Poisson(lambda_k) counts per length are drawn in their
    superposed form: a Poisson(sum lambda_k) number of cycles with iid
    lengths k ~ lambda_k / sum lambda_k for k up to the cutoff, plus a
    Bernoulli(1 - exp(-tail)) gate on cycles beyond it.
    """
    xf = _check_x(x)
    plan = _boltzmann_plan(weights, xf)
    gen = as_generator(rng)
    m = gen.poisson(plan.inner, reps) if plan.inner > 0 else np.zeros(reps, dtype=np.int64)
    total = int(m.sum())
    lengths = np.searchsorted(plan.cdf, 1.0 - gen.random(total), side="left") + 1
    lengths = np.minimum(lengths, plan.cutoff)
    if plan.tail > 0:
        gate = gen.random(reps) < -math.expm1(-plan.tail)
        if gate.any():
            rows = [lengths[o:o + c] for o, c in zip(np.concatenate([[0], np.cumsum(m)[:-1]]), m)]
            for i in np.flatnonzero(gate):
                extra = _tail_lengths(weights, xf, plan, _truncated_poisson(plan.tail, gen), gen)
                rows[i] = np.concatenate([rows[i], extra]).astype(np.int64)
                m[i] += len(extra)
            lengths = np.concatenate(rows) if rows else lengths
    offsets = np.concatenate([[0], np.cumsum(m)]).astype(np.int64)
    return BoltzmannBatch(lengths.astype(np.int64), offsets)


def assemble_permutation(lengths: Sequence[int], rng) -> Permutation:
    """Uniformly random labelled permutation with the given cycle lengths."""
    gen = as_generator(rng)
    ks = sorted((int(k) for k in lengths), reverse=True)
    n = sum(ks)
    labels = gen.permutation(n) + 1
    img = [0] * n
    pos = 0
    for k in ks:
        block = list(labels[pos:pos + k])
        pos += k
        lo = block.index(min(block))
        cyc = [block[lo]] + block[:lo] + block[lo + 1:]
        for i, a in enumerate(cyc):
            img[a - 1] = int(cyc[(i + 1) % k])
    return Permutation(tuple(img))


def boltzmann_sample(weights: WeightSequence, x, rng) -> BoltzmannDraw:
    gen = as_generator(rng)
    row = boltzmann_batch(weights, x, 1, gen).row(0)
    p = assemble_permutation(row, gen)
    return BoltzmannDraw(p, p.n, len(row))


def _power_sum(weights: WeightSequence, x: float, divide: bool) -> float:
    """sum_k sigma_k x^k (/ k if ``divide``) with a certified relative tail bound."""
    support = weights.finite_support
    if support is not None:
        if support == 0:
            return 0.0
        k = np.arange(1, support + 1)
        terms = weights.sigma_array(support)[1:] * np.exp(k * math.log(x))
        return float((terms / k if divide else terms).sum())
    sup = float(weights.sup)
    K = 64
    while True:
        k = np.arange(1, K + 1)
        terms = weights.sigma_array(K)[1:] * np.exp(k * math.log(x))
        if divide:
            terms = terms / k
        s = float(terms.sum())
        bound = sup * math.exp((K + 1) * math.log(x)) / (1 - x)
        if divide:
            bound /= K + 1
        if bound <= MOMENT_RTOL * s or bound < 1e-300:
            return s
        K *= 2
        if K > 8 * MAX_CUTOFF:
            raise TailError(f"power sum at x={x} needs more than {K} terms")


def mean_size(weights: WeightSequence, x) -> float:
    return _power_sum(weights, _check_x(x), divide=False)


def boltzmann_moments(weights: WeightSequence, x) -> tuple[float, float, float]:
    """(E N, E X, Var X) under the Boltzmann measure; E X = Var X since counts are Poisson."""
    xf = _check_x(x)
    cycles = _power_sum(weights, xf, divide=True)
    return _power_sum(weights, xf, divide=False), cycles, cycles


def calibrate_x(weights: WeightSequence, mu, tol: float = 1e-9, max_iter: int = 200) -> float:
    """Bisect for the x with E N = mu."""
    mu = float(mu)
    if not mu > 0:
        raise DomainError(f"target mean size must be > 0, got {mu}")
    support = weights.finite_support
    if support is not None:
        cap = float(sum(weights.sigma(k) for k in range(1, support + 1)))
        if cap <= mu:
            raise CalibrationError(f"mean size stays below {cap} < mu={mu} for finitely supported weights")
    lo, hi = 1e-15, 1 - 1e-15
    x = 0.5
    for _ in range(max_iter):
        x = 0.5 * (lo + hi)
        val = mean_size(weights, x)
        if abs(val - mu) <= tol * mu:
            return x
        if val < mu:
            lo = x
        else:
            hi = x
    raise CalibrationError(f"bisection did not reach mean size {mu} within {max_iter} steps")
