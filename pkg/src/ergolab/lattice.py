"""Bernoulli actions of Z^d with box averaging sets [-n, n]^d.

The action translates coordinates, (T_g x)_h = x_{h-g}; the cocycle weight
attached to g is the density of the translated measure, an exact finite
product for compactly perturbed families.  Site measures, kinds, and the
exactness story mirror the one-dimensional module; only boxes replace
intervals, and the homoclinic notion is agreement outside a box.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from .averages import SumSeries
from .bernoulli import (
    CONVERGENT,
    DIVERGENT,
    KakutaniResult,
    LogValue,
    SiteMeasure,
    hellinger_sq,
)
from .errors import NonSingularError
from .seeding import TAG_LATTICE, combine, spawn, uniform01_nd, zigzag, zigzag_vec
from .shift_core import Alphabet, LazyTail

_BOX_CELL_CAP = 1 << 24


def _as_vec(g) -> tuple[int, ...]:
    return tuple(int(v) for v in g)


class LatticeFamily:
    """Base interface for Z^d product families; use the concrete kinds."""

    dimension: int
    alphabet: Alphabet
    kind: str

    def site(self, g) -> SiteMeasure:
        raise NotImplementedError

    def preserved_by(self, g) -> bool:
        """Whether translating by g leaves every site measure unchanged."""
        raise NotImplementedError

    def configuration(self, seed: int) -> "LatticeConfiguration":
        return LatticeConfiguration(self, seed)

    def run_configuration(self, master_seed: int, run: int) -> "LatticeConfiguration":
        return self.configuration(spawn(master_seed, run))


class LatticeIID(LatticeFamily):
    kind = "iid"

    def __init__(self, dimension: int, base: SiteMeasure) -> None:
        if not 1 <= dimension <= 3:
            raise ValueError("dimension must be 1..3")
        self.dimension = dimension
        self.base = base
        self.alphabet = Alphabet(base.n_symbols)

    def site(self, g) -> SiteMeasure:
        return self.base

    def preserved_by(self, g) -> bool:
        return True


class LatticeCompact(LatticeFamily):
    """Base measure outside finitely many perturbed lattice sites."""

    kind = "compactly_perturbed"

    def __init__(
        self, dimension: int, base: SiteMeasure, window: Mapping[object, SiteMeasure]
    ) -> None:
        if not 1 <= dimension <= 3:
            raise ValueError("dimension must be 1..3")
        self.dimension = dimension
        self.base = base
        self.alphabet = Alphabet(base.n_symbols)
        self.window: dict[tuple[int, ...], SiteMeasure] = {}
        for g, m in window.items():
            vec = _as_vec(g)
            if len(vec) != dimension:
                raise ValueError(f"site {vec} has wrong dimension")
            if m.n_symbols != base.n_symbols:
                raise ValueError("window measures must share the base alphabet")
            if m.probs != base.probs:
                self.window[vec] = m

    def site(self, g) -> SiteMeasure:
        return self.window.get(_as_vec(g), self.base)

    def preserved_by(self, g) -> bool:
        vec = _as_vec(g)
        if all(v == 0 for v in vec):
            return True
        return not self.window


class LatticePeriodic(LatticeFamily):
    """site(g) determined by the residue of g modulo a period vector."""

    kind = "periodic"

    def __init__(self, period, sites: Mapping[object, SiteMeasure]) -> None:
        self.period = _as_vec(period)
        if not 1 <= len(self.period) <= 3 or any(p < 1 for p in self.period):
            raise ValueError("period must be 1..3 positive integers")
        self.dimension = len(self.period)
        self._sites: dict[tuple[int, ...], SiteMeasure] = {}
        for r, m in sites.items():
            self._sites[_as_vec(r)] = m
        expected = 1
        for p in self.period:
            expected *= p
        if len(self._sites) != expected:
            raise ValueError("need one site measure per residue class")
        sizes = {m.n_symbols for m in self._sites.values()}
        if len(sizes) != 1:
            raise ValueError("all site measures must share one alphabet")
        self.alphabet = Alphabet(sizes.pop())

    def residue(self, g) -> tuple[int, ...]:
        return tuple(v % p for v, p in zip(_as_vec(g), self.period))

    def site(self, g) -> SiteMeasure:
        return self._sites[self.residue(g)]

    def preserved_by(self, g) -> bool:
        return all(
            self._sites[r].probs == self.site(tuple(a + b for a, b in zip(r, _as_vec(g)))).probs
            for r in self._sites
        )


def alternating_rows(axis: int = 1, dimension: int = 2) -> LatticePeriodic:
    """d-dimensional family whose site measure flips with the parity of one
    coordinate: the lattice analogue of the alternating one-dimensional family."""
    even = SiteMeasure.of(["3/4", "1/4"])
    odd = SiteMeasure.of(["1/4", "3/4"])
    period = tuple(2 if i == axis else 1 for i in range(dimension))
    sites = {}
    for r in _box_residues(period):
        sites[r] = even if r[axis] == 0 else odd
    return LatticePeriodic(period, sites)


def _box_residues(period: tuple[int, ...]) -> Iterable[tuple[int, ...]]:
    grids = np.meshgrid(*[np.arange(p) for p in period], indexing="ij")
    for idx in zip(*[g.ravel() for g in grids]):
        yield tuple(int(v) for v in idx)


class LatticeConfiguration:
    """Lazy point of the lattice shift space; pure in (seed, coordinates)."""

    __slots__ = ("family", "seed", "offset")

    def __init__(self, family: LatticeFamily, seed: int, offset=None) -> None:
        self.family = family
        self.seed = seed
        self.offset = _as_vec(offset) if offset is not None else (0,) * family.dimension

    def translated(self, g) -> "LatticeConfiguration":
        """T_g of this point: reads h as we read h - g."""
        vec = _as_vec(g)
        return LatticeConfiguration(
            self.family,
            self.seed,
            tuple(o - v for o, v in zip(self.offset, vec)),
        )

    def _cdf(self, g: tuple[int, ...]) -> np.ndarray:
        return LazyTail.cdf(self.family.site(g).probs)

    def symbol(self, g) -> int:
        vec = tuple(v + o for v, o in zip(_as_vec(g), self.offset))
        key = combine(self.seed, TAG_LATTICE, *(zigzag(v) for v in vec))
        u = (key >> 11) * 2.0**-53
        return int(np.searchsorted(self._cdf(vec), u, side="right")) + 1

    def box(self, radius: int, margins=None) -> np.ndarray:
        """Symbols on the product of ranges [-radius - m_i, radius + m_i].

        Axis i of the returned array indexes coordinate i, offset so that
        index 0 is the lower end of the range.
        """
        d = self.family.dimension
        margins = _as_vec(margins) if margins is not None else (0,) * d
        axes = [
            np.arange(-radius - m, radius + m + 1, dtype=np.int64) + o
            for m, o in zip(margins, self.offset)
        ]
        shape = tuple(len(a) for a in axes)
        cells = math.prod(shape)
        if cells > _BOX_CELL_CAP:
            raise ValueError(f"box of {cells} cells exceeds cap {_BOX_CELL_CAP}")
        mesh = np.meshgrid(*axes, indexing="ij")
        u = uniform01_nd(
            self.seed,
            (TAG_LATTICE,),
            [zigzag_vec(m.ravel()).reshape(shape) for m in mesh],
        )

        iid_like = isinstance(self.family, LatticeIID) or (
            isinstance(self.family, LatticeCompact) and not self.family.window
        )
        if isinstance(self.family, (LatticeIID, LatticeCompact)):
            base_cdf = LazyTail.cdf(self.family.base.probs)
            out = (np.searchsorted(base_cdf, u.ravel(), side="right") + 1).astype(
                np.int16
            ).reshape(shape)
            if not iid_like:
                lows = [int(a[0]) for a in axes]
                for g, m in self.family.window.items():
                    idx = tuple(v - lo for v, lo in zip(g, lows))
                    if all(0 <= i < s for i, s in zip(idx, shape)):
                        cdf = LazyTail.cdf(m.probs)
                        out[idx] = np.searchsorted(cdf, u[idx], side="right") + 1
            return out
        assert isinstance(self.family, LatticePeriodic)
        out = np.empty(shape, dtype=np.int16)
        period = self.family.period
        residues = [np.mod(mesh[i], period[i]) for i in range(d)]
        for r in _box_residues(period):
            mask = np.ones(shape, dtype=bool)
            for i in range(d):
                mask &= residues[i] == r[i]
            if mask.any():
                cdf = LazyTail.cdf(self.family._sites[r].probs)
                out[mask] = np.searchsorted(cdf, u[mask], side="right") + 1
        return out


# ---------------------------------------------------------------------------
# Operations


def _unit_vector(dimension: int, axis: int) -> tuple[int, ...]:
    if not 0 <= axis < dimension:
        raise ValueError(f"axis {axis} outside dimension {dimension}")
    return tuple(1 if i == axis else 0 for i in range(dimension))


def kakutani_sum_generator(
    family: LatticeFamily, axis: int, horizon: int
) -> KakutaniResult:
    """Squared-Hellinger equivalence sum for the translation along one
    standard basis vector, over the box of the given radius."""
    e = _unit_vector(family.dimension, axis)

    if isinstance(family, LatticeIID):
        return KakutaniResult(0.0, CONVERGENT, 0.0)

    if isinstance(family, LatticeCompact):
        affected = set(family.window)
        affected |= {tuple(a + b for a, b in zip(g, e)) for g in family.window}
        value = 0.0
        for h in sorted(affected):
            if max(abs(v) for v in h) <= horizon:
                value += hellinger_sq(
                    family.site(h), family.site(tuple(a - b for a, b in zip(h, e)))
                )
        return KakutaniResult(value, CONVERGENT, 0.0)

    assert isinstance(family, LatticePeriodic)
    per_residue = {
        r: hellinger_sq(
            family.site(r), family.site(tuple(a - b for a, b in zip(r, e)))
        )
        for r in _box_residues(family.period)
    }
    if all(v == 0.0 for v in per_residue.values()):
        return KakutaniResult(0.0, CONVERGENT, 0.0)
    value = 0.0
    for r, term in per_residue.items():
        if term:
            count = 1
            for ri, p in zip(r, family.period):
                count *= (horizon - ri) // p + (horizon + ri) // p + 1
            value += count * term
    return KakutaniResult(value, DIVERGENT, None)


def rn_derivative_g(
    family: LatticeFamily, x: LatticeConfiguration, g, tol: float = 1e-12
) -> LogValue:
    """log of the density of the g-translated measure at x: the exact finite
    product over perturbed sites i of mu_i(x_{i-g}) / mu_i(x_i) paired against
    the base."""
    vec = _as_vec(g)
    if isinstance(family, LatticeIID):
        return LogValue(0.0, 0.0)
    if isinstance(family, LatticePeriodic):
        if not family.preserved_by(vec):
            raise NonSingularError(
                f"periodic lattice family is singular under translation by {vec}"
            )
        return LogValue(0.0, 0.0)
    assert isinstance(family, LatticeCompact)
    base = family.base
    total = 0.0
    for i, m in family.window.items():
        pulled = tuple(a - b for a, b in zip(i, vec))
        s_pulled, s_here = x.symbol(pulled), x.symbol(i)
        total += math.log(float(m.prob(s_pulled))) - math.log(float(base.prob(s_pulled)))
        total -= math.log(float(m.prob(s_here))) - math.log(float(base.prob(s_here)))
    return LogValue(total, 0.0)


def _atom_coords(atom: Mapping[object, int]) -> dict[tuple[int, ...], int]:
    return {_as_vec(g): int(s) for g, s in atom.items()}


def box_ratio_average(
    family: LatticeFamily,
    f_terms: Sequence[tuple[float, Mapping[object, int]]],
    x: LatticeConfiguration,
    n_max: int,
) -> SumSeries:
    """Cocycle-weighted averages of f over the boxes [-n, n]^d, n = 1..n_max.

    f is a linear combination of finite pattern indicators: each atom maps
    lattice coordinates to required symbols (empty atom = constant 1).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    d = family.dimension
    atoms = [(float(c), _atom_coords(atom)) for c, atom in f_terms]
    reach = max(
        (max(abs(v) for v in g) for _, atom in atoms for g in atom),
        default=0,
    )
    if isinstance(family, LatticeCompact) and family.window:
        reach = max(
            reach, max(max(abs(v) for v in g) for g in family.window)
        )
    if isinstance(family, LatticePeriodic):
        # the boxes exhaust every translation, so all of them must be
        # non-singular, which for periodic families means constant sites
        if not all(
            family.preserved_by(_unit_vector(d, axis)) for axis in range(d)
        ):
            raise NonSingularError(
                "periodic lattice family is singular under some box translation"
            )

    block = x.box(n_max, margins=(reach,) * d)
    lows = (-n_max - reach,) * d

    axes = [np.arange(-n_max, n_max + 1, dtype=np.int64) for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    radius = np.maximum.reduce([np.abs(m) for m in mesh])

    def read(shift_vec: tuple[int, ...]) -> np.ndarray:
        # symbols x_{shift - g} arranged over the g grid
        slices = tuple(
            slice(s - n_max - lo, s + n_max + 1 - lo)
            for s, lo in zip(shift_vec, lows)
        )
        return block[slices][tuple(slice(None, None, -1) for _ in range(d))]

    values = np.zeros(radius.shape)
    for c, atom in atoms:
        if not atom:
            values += c
            continue
        ind = np.ones(radius.shape, dtype=bool)
        for g_atom, symbol in atom.items():
            ind &= read(g_atom) == symbol
        values += c * ind

    if isinstance(family, LatticeCompact) and family.window:
        logs = np.zeros(radius.shape)
        base_logs = family.base.log_probs()
        for i, m in family.window.items():
            table = m.log_probs() - base_logs
            here = table[x.symbol(i) - 1]
            logs += table[read(i) - 1] - here
        weights = np.exp(logs)
    else:
        weights = np.ones(radius.shape)

    num = np.bincount(radius.ravel(), (weights * values).ravel(), minlength=n_max + 1)
    den = np.bincount(radius.ravel(), weights.ravel(), minlength=n_max + 1)
    num_c, den_c = np.cumsum(num), np.cumsum(den)
    pts = tuple(range(1, n_max + 1))
    return SumSeries(pts, tuple(float(num_c[n] / den_c[n]) for n in pts), "ratio")
