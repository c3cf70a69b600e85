"""Poisson point processes over countable weighted ground spaces.

The sigma-finite base measure is a weighted counting measure on a countable
set of integer-labelled points, moved by an invertible map.  Counts in
finite regions are independent Poissons with the region weights as means,
which makes every cylinder-event probability exactly computable by
decomposing the constraint regions into atoms and enumerating consistent
atom counts.  Sampling is a pure function of (seed, point), so the induced
suspension dynamics is reproducible and race-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import CertifiedFailure
from .seeding import (
    TAG_POISSON,
    spawn,
    spawn_vec,
    uniform01,
    uniform01_grid,
    zigzag,
    zigzag_vec,
)

#: largest admissible constraint count (keeps atom enumeration finite)
COUNT_CAP = 64

#: split threshold for per-point Poisson sampling
_SPLIT_MEAN = 50.0


@dataclass(frozen=True)
class GroundSpace:
    """Countable point set with positive weights and an invertible map.

    ``jump(p, k)`` is the k-fold application of the map (negative k for the
    inverse); ``weight`` must be strictly positive wherever events look.
    """

    weight: Callable[[int], Fraction]
    jump: Callable[[int, int], int]
    name: str = "ground"
    measure_preserving: bool = True

    def forward(self, p: int) -> int:
        return self.jump(p, 1)

    def backward(self, p: int) -> int:
        return self.jump(p, -1)

    def region_weight(self, region: Iterable[int]) -> Fraction:
        return sum((Fraction(self.weight(p)) for p in region), Fraction(0))

    def check_measure_preserving(self, points: Iterable[int]) -> bool:
        return all(self.weight(self.jump(p, 1)) == self.weight(p) for p in points)


def integer_translation(step: int = 1) -> GroundSpace:
    """Translation p -> p + step on Z with unit weights (no finite invariant
    probability: the canonical ergodic-suspension base)."""
    return GroundSpace(
        weight=lambda p: Fraction(1),
        jump=lambda p, k: p + k * step,
        name=f"translation[{step}]",
    )


def integer_identity() -> GroundSpace:
    return GroundSpace(
        weight=lambda p: Fraction(1), jump=lambda p, k: p, name="identity"
    )


def finite_cycle(length: int) -> GroundSpace:
    if length < 1:
        raise ValueError("cycle length must be >= 1")

    def weight(p: int) -> Fraction:
        if not 0 <= p < length:
            raise ValueError(f"point {p} outside cycle of length {length}")
        return Fraction(1)

    return GroundSpace(
        weight=weight,
        jump=lambda p, k: (p + k) % length,
        name=f"cycle[{length}]",
    )


def weighted_points(weights: Mapping[int, object]) -> GroundSpace:
    """Static ground space (identity map) with explicit point weights."""
    table = {int(p): Fraction(w) for p, w in weights.items()}

    def weight(p: int) -> Fraction:
        if p not in table:
            raise ValueError(f"point {p} has no assigned weight")
        return table[p]

    return GroundSpace(weight=weight, jump=lambda p, k: p, name="weighted")


@dataclass(frozen=True)
class PoissonEvent:
    """Conjunction of count constraints [N(region_i) = k_i] on finite regions."""

    constraints: tuple[tuple[frozenset[int], int], ...]

    def __post_init__(self) -> None:
        for region, k in self.constraints:
            if k < 0 or k > COUNT_CAP:
                raise ValueError(f"count {k} outside [0, {COUNT_CAP}]")

    @classmethod
    def of(cls, constraints: Iterable[tuple[Iterable[int], int]]) -> "PoissonEvent":
        return cls(
            tuple((frozenset(int(p) for p in region), int(k)) for region, k in constraints)
        )

    @classmethod
    def count(cls, region: Iterable[int], k: int) -> "PoissonEvent":
        return cls.of([(region, k)])

    def support(self) -> frozenset[int]:
        out: frozenset[int] = frozenset()
        for region, _ in self.constraints:
            out |= region
        return out

    def intersect(self, other: "PoissonEvent") -> "PoissonEvent":
        return PoissonEvent(self.constraints + other.constraints)

    def pulled_back(self, gs: GroundSpace, n: int) -> "PoissonEvent":
        """Event whose truth at nu equals our truth at the n-fold suspension
        image of nu: regions are replaced by their n-fold preimages."""
        return PoissonEvent.of(
            [
                (frozenset(gs.jump(p, -n) for p in region), k)
                for region, k in self.constraints
            ]
        )


def _poisson_pmf(mean: float, k: int) -> float:
    if mean == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-mean + k * math.log(mean) - math.lgamma(k + 1))


def event_probability(gs: GroundSpace, event: PoissonEvent) -> float:
    """Exact probability of a Poissonian cylinder event.

    The constraint regions are split into the atoms of the algebra they
    generate; atom counts are independent Poisson variables, and every
    consistent assignment of atom counts is enumerated.  Inconsistent
    constraint systems get probability 0, not an error.
    """
    constraints = event.constraints
    if not constraints:
        return 1.0
    # trivial constraints on empty regions
    for region, k in constraints:
        if not region and k > 0:
            return 0.0
    live = [(region, k) for region, k in constraints if region]
    if not live:
        return 1.0

    points = sorted({p for region, _ in live for p in region})
    signature: dict[tuple[int, ...], list[int]] = {}
    for p in points:
        sig = tuple(i for i, (region, _) in enumerate(live) if p in region)
        signature.setdefault(sig, []).append(p)
    atoms = [
        (sig, float(gs.region_weight(pts))) for sig, pts in sorted(signature.items())
    ]
    targets = [k for _, k in live]

    total = 0.0
    counts = [0] * len(atoms)

    def recurse(idx: int, remaining: list[int], weight_prob: float) -> None:
        nonlocal total
        if idx == len(atoms):
            if all(r == 0 for r in remaining):
                total += weight_prob
            return
        sig, mean = atoms[idx]
        cap = min((remaining[i] for i in sig), default=COUNT_CAP)
        for c in range(cap + 1):
            for i in sig:
                remaining[i] -= c
            recurse(idx + 1, remaining, weight_prob * _poisson_pmf(mean, c))
            for i in sig:
                remaining[i] += c

    recurse(0, targets, 1.0)
    return total


class MixingGap(NamedTuple):
    gap: float
    bound: float
    ok: bool


def mixing_gap(gs: GroundSpace, b: PoissonEvent, c: PoissonEvent) -> MixingGap:
    """|P(B and C) - P(B) P(C)| against twice the weight of the support overlap."""
    gap = abs(
        event_probability(gs, b.intersect(c))
        - event_probability(gs, b) * event_probability(gs, c)
    )
    bound = 2.0 * float(gs.region_weight(b.support() & c.support()))
    return MixingGap(gap, bound, gap <= bound + 1e-12)


# ---------------------------------------------------------------------------
# Sampling


class PointSample:
    """Lazy Poisson configuration: count at point p is a pure function of
    (seed, p) with law Poisson(weight(p))."""

    __slots__ = ("gs", "seed")

    def __init__(self, gs: GroundSpace, seed: int) -> None:
        self.gs = gs
        self.seed = seed

    @classmethod
    def for_run(cls, gs: GroundSpace, master_seed: int, run: int) -> "PointSample":
        return cls(gs, spawn(master_seed, run))

    def count(self, p: int) -> int:
        mean = float(self.gs.weight(p))
        if mean <= _SPLIT_MEAN:
            u = uniform01(self.seed, TAG_POISSON, zigzag(p))
            return _poisson_inverse(u, mean)
        # additivity split: a sum of independent smaller Poissons, one keyed
        # sub-draw each, stays exact in distribution and needs no rejection loop
        chunks = math.ceil(mean / _SPLIT_MEAN)
        sub = mean / chunks
        return sum(
            _poisson_inverse(uniform01(self.seed, TAG_POISSON, zigzag(p), j), sub)
            for j in range(chunks)
        )

    def region_count(self, region: Iterable[int]) -> int:
        return sum(self.count(p) for p in region)

    def satisfies(self, event: PoissonEvent) -> bool:
        return all(self.region_count(r) == k for r, k in event.constraints)


def _poisson_inverse(u: float, mean: float) -> int:
    """Smallest k with u < CDF(k) for Poisson(mean); inversion by summation."""
    if mean == 0.0:
        return 0
    pmf = math.exp(-mean)
    cdf = pmf
    k = 0
    while u >= cdf and k < 4 * COUNT_CAP:
        k += 1
        pmf *= mean / k
        cdf += pmf
    return k


def suspension_indicator(sample: PointSample, event: PoissonEvent, n: int) -> int:
    """Indicator of the n-fold suspension image of the sample lying in the
    event, evaluated by pulling the constraint regions back."""
    return int(sample.satisfies(event.pulled_back(sample.gs, n)))


def _count_table(mean: float) -> np.ndarray:
    """Poisson CDF table whose searchsorted inversion reproduces
    ``_poisson_inverse`` bit-for-bit (same accumulation, same cap)."""
    pmf = math.exp(-mean)
    cdf = [pmf]
    for k in range(1, 4 * COUNT_CAP):
        pmf *= mean / k
        cdf.append(cdf[-1] + pmf)
    return np.asarray(cdf)


def sample_count_grid(
    gs: GroundSpace, master_seed: int, n_runs: int, points: Sequence[int]
) -> np.ndarray:
    """(n_runs, len(points)) per-run point counts.

    Row r reproduces ``PointSample.for_run(gs, master_seed, r)`` exactly; the
    grid form exists purely so Monte Carlo batches can be vectorized.
    """
    points = list(points)
    means = np.array([float(gs.weight(p)) for p in points])
    if np.any(means > _SPLIT_MEAN):
        raise ValueError("grid sampling supports means up to the split threshold")
    out = np.empty((n_runs, len(points)), dtype=np.int16)
    seeds = spawn_vec(master_seed, np.arange(n_runs, dtype=np.int64))
    keys = zigzag_vec(np.asarray(points, dtype=np.int64))
    chunk = max(1, (1 << 22) // max(len(points), 1))
    for lo in range(0, n_runs, chunk):
        hi = min(lo + chunk, n_runs)
        u = uniform01_grid(seeds[lo:hi], (TAG_POISSON,), keys)
        block = np.empty_like(u, dtype=np.int16)
        for mean in np.unique(means):
            cols = means == mean
            table = _count_table(float(mean))
            block[:, cols] = np.searchsorted(table, u[:, cols], side="right").astype(
                np.int16
            )
        out[lo:hi] = block
    return out


def indicator_grid(
    gs: GroundSpace,
    master_seed: int,
    n_runs: int,
    event: PoissonEvent,
    times: Sequence[int],
) -> np.ndarray:
    """(n_runs, len(times)) 0/1 matrix: entry [r, j] is the indicator of the
    times[j]-fold suspension image of run r's sample lying in the event."""
    pulled = [event.pulled_back(gs, int(t)) for t in times]
    points = sorted({p for ev in pulled for p in ev.support()})
    col = {p: i for i, p in enumerate(points)}
    counts = sample_count_grid(gs, master_seed, n_runs, points)
    out = np.ones((n_runs, len(times)), dtype=bool)
    for j, ev in enumerate(pulled):
        for region, k in ev.constraints:
            idx = [col[p] for p in region]
            region_counts = (
                counts[:, idx].sum(axis=1) if idx else np.zeros(n_runs, dtype=np.int64)
            )
            out[:, j] &= region_counts == k
    return out.astype(np.float64)


# ---------------------------------------------------------------------------
# Subsequence extraction


def find_null_subsequence(
    gs: GroundSpace,
    regions: Sequence[Iterable[int]],
    count: int,
    horizon: int,
) -> list[int]:
    """Greedy strictly increasing times n_1 < ... < n_count whose pulled-back
    regions have pairwise overlaps below the 2^-j schedule.

    Overlaps are exact weights of set intersections; j indexes the new time,
    and the unshifted regions (time 0) participate as the j = 0 stage.  A
    horizon exhaustion raises a certified failure naming the first step that
    could not be satisfied (e.g. for maps with an invariant finite part the
    overlap never decays).
    """
    fixed = [frozenset(int(p) for p in region) for region in regions]
    chosen: list[int] = []
    shifted: list[list[frozenset[int]]] = [fixed]
    candidate = 1
    for j in range(1, count + 1):
        threshold = Fraction(1, 2**j)
        found = None
        for n in range(candidate, horizon + 1):
            pulled = [frozenset(gs.jump(p, -n) for p in region) for region in fixed]
            if all(
                gs.region_weight(old & new) < threshold
                for stage in shifted
                for old in stage
                for new in pulled
            ):
                found = n
                shifted.append(pulled)
                break
        if found is None:
            raise CertifiedFailure(
                f"no admissible time at step {j} within horizon {horizon}", step=j
            )
        chosen.append(found)
        candidate = found + 1
    return chosen


def banach_density_filter(
    values, eps: float, horizon: int
) -> tuple[list[int], float]:
    """Indices n in [1, horizon] with a_n < eps, and their density.

    ``values`` is a sequence (values[0] is a_1) or a callable n -> a_n.
    """
    if callable(values):
        seq = [float(values(n)) for n in range(1, horizon + 1)]
    else:
        seq = [float(v) for v in values[:horizon]]
        if len(seq) < horizon:
            raise ValueError("need at least `horizon` values")
    kept = [n for n, a in enumerate(seq, start=1) if 0.0 <= a < eps]
    return kept, len(kept) / horizon


# ---------------------------------------------------------------------------
# Seeded experiments


class VarianceDecay(NamedTuple):
    """Per block size: sample mean and variance of block averages across runs."""

    block_sizes: tuple[int, ...]
    means: tuple[float, ...]
    variances: tuple[float, ...]


def subsequence_average_experiment(
    gs: GroundSpace,
    event: PoissonEvent,
    times: Sequence[int],
    block_sizes: Sequence[int],
    n_runs: int,
    master_seed: int,
) -> VarianceDecay:
    """Block averages (1/N) sum_{j<N} 1_event(T_*^{n_j} nu) across seeded runs."""
    block_sizes = [int(n) for n in block_sizes]
    if max(block_sizes) > len(times):
        raise ValueError("block size exceeds number of supplied times")
    ind = indicator_grid(gs, master_seed, n_runs, event, list(times)[: max(block_sizes)])
    cums = np.cumsum(ind, axis=1)
    means, variances = [], []
    for n in block_sizes:
        avg = cums[:, n - 1] / n
        means.append(float(avg.mean()))
        variances.append(float(avg.var(ddof=1)))
    return VarianceDecay(tuple(block_sizes), tuple(means), tuple(variances))


class CorrelationPoint(NamedTuple):
    time: int
    estimate: float
    half_width: float
    limit: float


def weak_mixing_probe(
    gs: GroundSpace,
    f_terms: Sequence[tuple[float, PoissonEvent]],
    g_terms: Sequence[tuple[float, PoissonEvent]],
    times: Sequence[int],
    n_runs: int,
    master_seed: int,
) -> list[CorrelationPoint]:
    """Monte Carlo correlations int f(T_*^{n_j} nu) g(nu) with the exact
    product of means as the expected limit along a null subsequence."""
    limit = float(
        sum(c * event_probability(gs, ev) for c, ev in f_terms)
        * sum(c * event_probability(gs, ev) for c, ev in g_terms)
    )
    g_vals = np.zeros(n_runs)
    for c, ev in g_terms:
        g_vals += c * indicator_grid(gs, master_seed, n_runs, ev, [0])[:, 0]
    out = []
    for t in times:
        f_vals = np.zeros(n_runs)
        for c, ev in f_terms:
            f_vals += c * indicator_grid(gs, master_seed, n_runs, ev, [int(t)])[:, 0]
        prod = f_vals * g_vals
        out.append(
            CorrelationPoint(
                int(t),
                float(prod.mean()),
                3.0 * float(prod.std(ddof=1)) / math.sqrt(n_runs),
                limit,
            )
        )
    return out
