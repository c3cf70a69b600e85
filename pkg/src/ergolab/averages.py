"""Ergodic sums and averages over symbolic and Poisson systems.

Observables are finite linear combinations of cylinder indicators (symbolic
systems) or Poissonian count-event indicators (suspensions).  Series are
reported at power-of-two checkpoints; dual sums carry the cocycle weights
d(mu o T^-k)/d mu, which are exact for the certified family kinds, so the
one-function sanity identities (dual of the constant 1 equals n on a
measure-preserving system) hold without tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import NamedTuple, Sequence

import numpy as np

from . import bernoulli as bn
from . import poisson as ps
from .seeding import spawn
from .shift_core import Configuration, Cylinder

series_checkpoints = bn.series_checkpoints


@dataclass(frozen=True)
class Observable:
    """Finite linear combination of indicator atoms (all of one kind)."""

    terms: tuple[tuple[float, object], ...]

    @classmethod
    def indicator(cls, atom) -> "Observable":
        return cls(((1.0, atom),))

    @classmethod
    def constant(cls, value: float, kind: str = "cylinder") -> "Observable":
        atom = Cylinder.empty() if kind == "cylinder" else ps.PoissonEvent(())
        return cls(((float(value), atom),))

    @classmethod
    def combine(cls, terms) -> "Observable":
        return cls(tuple((float(c), atom) for c, atom in terms))

    def scaled(self, factor: float) -> "Observable":
        return Observable(tuple((c * factor, atom) for c, atom in self.terms))

    def plus(self, other: "Observable") -> "Observable":
        return Observable(self.terms + other.terms)


@dataclass(frozen=True)
class SumSeries:
    checkpoints: tuple[int, ...]
    values: tuple[float, ...]
    normalization: str  # "raw" | "per_n" | "ratio"
    error_bounds: tuple[float, ...] = ()

    @property
    def final_value(self) -> float:
        return self.values[-1]

    def rows(self):
        errs = self.error_bounds or (0.0,) * len(self.values)
        return list(zip(self.checkpoints, self.values, errs))


class BernoulliSystem:
    """Shift with a Bernoulli product measure, wrapped for the engine."""

    kind = "bernoulli"

    def __init__(self, family: bn.BernoulliFamily) -> None:
        self.family = family

    @property
    def measure_preserving(self) -> bool:
        fam = self.family
        if isinstance(fam, bn.IIDFamily):
            return True
        if isinstance(fam, bn.CompactFamily):
            return not fam.window
        if isinstance(fam, bn.PeriodicFamily):
            return fam.is_constant
        return False

    def sample(self, seed: int) -> Configuration:
        return self.family.configuration(seed)

    def run_sample(self, master_seed: int, run: int) -> Configuration:
        return self.sample(spawn(master_seed, run))

    def expectation(self, obs: Observable) -> float:
        return float(
            sum(Fraction(c) * bn.measure(self.family, atom) for c, atom in obs.terms)
        )

    def abs_expectation(self, obs: Observable) -> float:
        """Exact L1 norm of the observable via refinement enumeration."""
        coords = sorted(
            {i for _, atom in obs.terms for i in atom.coords() if not atom.is_empty}
        )
        const = sum(c for c, atom in obs.terms if atom.is_empty)
        if not coords:
            return abs(const)
        if self.family.alphabet.size ** len(coords) > 1 << 20:
            raise ValueError("observable refinement too large to enumerate")
        total = Fraction(0)
        for assignment in product(self.family.alphabet.symbols, repeat=len(coords)):
            lookup = dict(zip(coords, assignment))
            value = const + sum(
                c
                for c, atom in obs.terms
                if not atom.is_empty
                and all(lookup[i] == atom.symbol(i) for i in atom.coords())
            )
            weight = Fraction(1)
            for i, s in lookup.items():
                weight *= self.family.site(i).prob(s)
            total += weight * abs(Fraction(value))
        return float(total)

    def value_series(self, x: Configuration, obs: Observable, times: np.ndarray) -> np.ndarray:
        """f(T^t x) for each t in times."""
        times = np.asarray(times, dtype=np.int64)
        out = np.zeros(len(times))
        spans = [atom for _, atom in obs.terms if not atom.is_empty]
        if spans:
            lo = min(a.left for a in spans) + int(times.min())
            hi = max(a.right for a in spans) + int(times.max())
            block = x.block(lo, hi)
        for c, atom in obs.terms:
            if atom.is_empty:
                out += c
                continue
            ind = np.ones(len(times), dtype=bool)
            for j in atom.coords():
                ind &= block[(j + times) - lo] == atom.symbol(j)
            out += c * ind
        return out

    def dual_log_weights(
        self, x: Configuration, n: int, tol: float = 1e-12
    ) -> tuple[np.ndarray, float]:
        """log d(mu o T^-k)/d mu (x) for k = 0..n-1."""
        return bn.rn_log_weights(self.family, x, -np.arange(n), tol=tol)


class PoissonSystem:
    """Poisson suspension of a measure-preserving ground map."""

    kind = "poisson"

    def __init__(self, gs: ps.GroundSpace) -> None:
        self.gs = gs

    measure_preserving = True

    def sample(self, seed: int) -> ps.PointSample:
        return ps.PointSample(self.gs, seed)

    def run_sample(self, master_seed: int, run: int) -> ps.PointSample:
        return ps.PointSample.for_run(self.gs, master_seed, run)

    def expectation(self, obs: Observable) -> float:
        return float(
            sum(c * ps.event_probability(self.gs, ev) for c, ev in obs.terms)
        )

    def abs_expectation(self, obs: Observable) -> float:
        if len(obs.terms) == 1 and obs.terms[0][0] >= 0:
            return self.expectation(obs)
        raise ValueError("L1 norm implemented for single nonnegative terms only")

    def value_series(self, sample: ps.PointSample, obs: Observable, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=np.int64)
        out = np.zeros(len(times))
        for c, ev in obs.terms:
            if not ev.constraints:
                out += c
                continue
            out += c * np.array(
                [ps.suspension_indicator(sample, ev, int(t)) for t in times],
                dtype=np.float64,
            )
        return out

    def dual_log_weights(
        self, sample: ps.PointSample, n: int, tol: float = 1e-12
    ) -> tuple[np.ndarray, float]:
        return np.zeros(n), 0.0

    def values_matrix(
        self, master_seed: int, n_runs: int, obs: Observable, times: Sequence[int]
    ) -> np.ndarray:
        out = np.zeros((n_runs, len(times)))
        for c, ev in obs.terms:
            if not ev.constraints:
                out += c
            else:
                out += c * ps.indicator_grid(self.gs, master_seed, n_runs, ev, times)
        return out


def values_matrix(system, master_seed: int, n_runs: int, obs: Observable, times) -> np.ndarray:
    """(runs, times) observable values f(T^t x_r), batched over seeded runs."""
    times = np.asarray(list(times), dtype=np.int64)
    if hasattr(system, "values_matrix"):
        return system.values_matrix(master_seed, n_runs, obs, [int(t) for t in times])
    out = np.empty((n_runs, len(times)))
    for r in range(n_runs):
        out[r] = system.value_series(system.run_sample(master_seed, r), obs, times)
    return out


# ---------------------------------------------------------------------------
# Series


def birkhoff_series(system, f: Observable, x, horizon: int) -> SumSeries:
    """Forward averages S_n(f)(x)/n at power-of-two checkpoints."""
    values = system.value_series(x, f, np.arange(horizon))
    sums = np.cumsum(values)
    pts = series_checkpoints(horizon)
    return SumSeries(
        tuple(pts), tuple(float(sums[n - 1] / n) for n in pts), "per_n"
    )


def dual_series(system, f: Observable, x, horizon: int, tol: float = 1e-12) -> SumSeries:
    """Raw dual sums sum_{k<n} d(mu o T^-k)/d mu (x) f(T^-k x)."""
    logs, err = system.dual_log_weights(x, horizon, tol)
    weights = np.exp(logs)
    values = system.value_series(x, f, -np.arange(horizon))
    sums = np.cumsum(weights * values)
    pts = series_checkpoints(horizon)
    return SumSeries(
        tuple(pts),
        tuple(float(sums[n - 1]) for n in pts),
        "raw",
        tuple(n * err for n in pts),
    )


def hurewicz_ratio_series(system, f: Observable, x, horizon: int, tol: float = 1e-12) -> SumSeries:
    """Dual-weighted ratio averages: dual sums of f over dual sums of 1."""
    logs, _ = system.dual_log_weights(x, horizon, tol)
    weights = np.exp(logs)
    values = system.value_series(x, f, -np.arange(horizon))
    num = np.cumsum(weights * values)
    den = np.cumsum(weights)
    pts = series_checkpoints(horizon)
    return SumSeries(tuple(pts), tuple(float(num[n - 1] / den[n - 1]) for n in pts), "ratio")


# ---------------------------------------------------------------------------
# Probes


class MaximalInequalityResult(NamedTuple):
    empirical_tail: float
    bound: float
    mc_sigma: float
    ok: bool


def maximal_inequality_probe(
    system,
    f: Observable,
    t: float,
    n_runs: int,
    horizon: int,
    master_seed: int,
) -> MaximalInequalityResult:
    """Fraction of seeded runs whose running sup of |dual ratio| exceeds t,
    against the L1-over-t bound."""
    if t <= 0:
        raise ValueError("threshold t must be positive")
    exceed = 0
    for r in range(n_runs):
        x = system.run_sample(master_seed, r)
        logs, _ = system.dual_log_weights(x, horizon)
        weights = np.exp(logs)
        values = system.value_series(x, f, -np.arange(horizon))
        ratios = np.cumsum(weights * values) / np.cumsum(weights)
        if np.max(np.abs(ratios)) > t:
            exceed += 1
    tail = exceed / n_runs
    bound = system.abs_expectation(f) / t
    sigma = math.sqrt(max(tail * (1.0 - tail), 1.0 / n_runs) / n_runs)
    return MaximalInequalityResult(tail, bound, sigma, tail <= bound + 3.0 * sigma)


class TwoSubsequenceResult(NamedTuple):
    passed: bool
    lower_quantile: float
    threshold: float
    target_mean: float
    slack: float
    block_means: tuple[float, ...]
    block_variances: tuple[float, ...]


def two_subsequence_probe(
    system,
    indicator: Observable,
    times: Sequence[int],
    block_sizes: Sequence[int],
    alpha: float,
    n_runs: int,
    master_seed: int,
) -> TwoSubsequenceResult:
    """Empirical check of the two-subsequence divergence hypothesis.

    Per run, block averages (1/N) sum_{k<N} 1_A(T^{n_k} x) are formed for the
    given block sizes; the liminf surrogate is the minimum over the last
    quarter of the block sizes.  The probe passes when the 5% quantile of
    the surrogate clears alpha * mu(A) minus three sample standard
    deviations of Monte Carlo slack.
    """
    block_sizes = sorted(int(n) for n in block_sizes)
    if block_sizes[0] < 1 or block_sizes[-1] > len(times):
        raise ValueError("block sizes must fit within the supplied times")
    if not all(a < b for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    ind = values_matrix(system, master_seed, n_runs, indicator, list(times)[: block_sizes[-1]])
    cums = np.cumsum(ind, axis=1)
    block_avgs = np.stack([cums[:, n - 1] / n for n in block_sizes], axis=1)
    quarter = max(1, math.ceil(len(block_sizes) / 4))
    liminf = block_avgs[:, -quarter:].min(axis=1)
    mu = system.expectation(indicator)
    slack = 3.0 * float(liminf.std(ddof=1)) if n_runs > 1 else 0.0
    q05 = float(np.quantile(liminf, 0.05))
    threshold = alpha * mu - slack
    return TwoSubsequenceResult(
        passed=q05 >= threshold,
        lower_quantile=q05,
        threshold=threshold,
        target_mean=mu,
        slack=slack,
        block_means=tuple(float(v) for v in block_avgs.mean(axis=0)),
        block_variances=tuple(float(v) for v in block_avgs.var(axis=0, ddof=1)),
    )
