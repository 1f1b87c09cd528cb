"""Generators: digit Cantor sets, product configurations, random configurations.

Randomness uses numpy's PCG64 seeded through ``SeedSequence``; a run seeded
with ``seed`` draws from ``Generator(PCG64(SeedSequence(seed)))`` and grid
points of a sweep use ``SeedSequence([seed, index])``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .config import Configuration
from .exact import Exponent, PValue
from .geometry import Ambient, Cube, CubeSet, GeometryError, TubeSet
from .setstats import fiber_counts


@dataclass(frozen=True)
class DigitSet:
    p: int
    digits: frozenset[int]

    def __post_init__(self):
        digits = frozenset(int(d) for d in self.digits)
        if not digits:
            raise GeometryError("digit set must be nonempty")
        if any(not 0 <= d < self.p for d in digits):
            raise GeometryError(f"digits {sorted(digits)} outside 0..{self.p - 1}")
        object.__setattr__(self, "digits", digits)

    @classmethod
    def of(cls, p: int, digits: Iterable[int]) -> "DigitSet":
        return cls(p, frozenset(digits))

    @classmethod
    def full(cls, p: int) -> "DigitSet":
        return cls(p, frozenset(range(p)))

    @property
    def dimension_pair(self) -> tuple[int, int]:
        """``(|digits|, p)``: the dimension is ``log |digits| / log p``."""
        return len(self.digits), self.p

    @property
    def exponent(self) -> Exponent:
        return Exponent.log(self.p, len(self.digits))

    @property
    def dimension(self) -> float:
        return math.log(len(self.digits)) / math.log(self.p)


def cantor_1d(p: int, n: int, digits: DigitSet | Sequence[DigitSet]) -> list[int]:
    """Residues mod ``p^n`` whose base-``p`` digits lie in ``digits``.

    A sequence of digit sets (least significant digit first) builds a mixed
    Cantor set whose dimension is only approximately constant across scales.
    """
    per_level = [digits] * n if isinstance(digits, DigitSet) else list(digits)
    if len(per_level) != n:
        raise GeometryError(f"need {n} digit sets, got {len(per_level)}")
    for d in per_level:
        if d.p != p:
            raise GeometryError("digit set base differs from p")
    vals = [0]
    for j, d in enumerate(per_level):
        vals = [v + dig * p**j for v in vals for dig in sorted(d.digits)]
    return sorted(vals)


def product_config(
    amb: Ambient, A: Iterable[int], B: Iterable[int], slopes: Iterable[int]
) -> Configuration:
    """``P = A x B`` with ``T(x, y) = {[a, y - a x] : a in slopes}``."""
    A, B, slopes = sorted(set(A)), sorted(set(B)), sorted(set(slopes))
    if not (A and B and slopes):
        raise GeometryError("product_config needs nonempty factors")
    assoc = {}
    for x in A:
        for y in B:
            c = amb.cube(x, y)
            assoc[c] = tuple(amb.tube(a, y - a * x) for a in slopes)
    return Configuration(amb, tuple(assoc), assoc)


def cantor_product_config(
    p: int, n: int, a_digits: Iterable[int], b_digits: Iterable[int], slope_digits: Iterable[int]
) -> Configuration:
    amb = Ambient(p, n)
    return product_config(
        amb,
        cantor_1d(p, n, DigitSet.of(p, a_digits)),
        cantor_1d(p, n, DigitSet.of(p, b_digits)),
        cantor_1d(p, n, DigitSet.of(p, slope_digits)),
    )


def make_rng(seed: int | Sequence[int]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def random_config(
    seed: int | Sequence[int],
    p: int,
    n: int,
    size: int,
    M: int,
    slope_digits: Iterable[int] | None = None,
) -> Configuration:
    """Seeded configuration: ``size`` distinct cubes, each with ``M`` slopes from a Cantor pool.

    Draw order: cube indices ``x*p^n + y`` without replacement, then one
    slope sample per cube in sorted cube order.
    """
    amb = Ambient(p, n)
    q = amb.q
    if not 1 <= size <= q * q:
        raise GeometryError(f"|P|={size} outside [1, {q * q}]")
    digits = DigitSet.full(p) if slope_digits is None else DigitSet.of(p, slope_digits)
    pool = np.array(cantor_1d(p, n, digits), dtype=np.int64)
    if not 1 <= M <= len(pool):
        raise GeometryError(f"M={M} outside [1, {len(pool)}] for this slope pool")
    rng = make_rng(seed)
    idx = np.sort(rng.choice(q * q, size=size, replace=False))
    assoc = {}
    for i in idx.tolist():
        x, y = divmod(i, q)
        picks = np.sort(rng.choice(pool, size=M, replace=False)).tolist()
        assoc[amb.cube(x, y)] = tuple(amb.tube(a, y - a * x) for a in picks)
    return Configuration(amb, tuple(assoc), assoc)


def random_weighted_instance(
    rng: np.random.Generator, p: int, n: int, n_cubes: int, n_tubes: int, max_den: int = 7
) -> tuple[CubeSet, TubeSet]:
    """Distinct cubes with random rational weights ``u/v`` and distinct random tubes."""
    amb = Ambient(p, n)
    q = amb.q
    n_cubes = min(n_cubes, q * q)
    n_tubes = min(n_tubes, q * q)
    cubes = [amb.cube(*divmod(int(i), q)) for i in rng.choice(q * q, n_cubes, replace=False)]
    tubes = [amb.tube(*divmod(int(i), q)) for i in rng.choice(q * q, n_tubes, replace=False)]
    nums = rng.integers(0, 4 * max_den, size=n_cubes)
    dens = rng.integers(1, max_den + 1, size=n_cubes)
    weights = {c: Fraction(int(u), int(v)) for c, u, v in zip(cubes, nums, dens)}
    return CubeSet.of(amb, cubes, weights=weights), TubeSet.of(amb, tubes)


def expected_coarse_cover(p: int, n: int, size: int) -> tuple[float, float]:
    """Mean and variance of ``|D_{1/p}(P)|`` for ``size`` cubes drawn without replacement.

    Each of the ``p^2`` coarse cells holds ``c = p^(2n-2)`` of ``N = p^2n`` cubes;
    a cell is missed with probability ``C(N-c, k) / C(N, k)``.
    """
    N = p ** (2 * n)
    c = N // p**2
    cells = p * p
    miss1 = Fraction(math.comb(N - c, size), math.comb(N, size))
    miss2 = Fraction(math.comb(N - 2 * c, size), math.comb(N, size)) if N - 2 * c >= 0 else 0
    mean = cells * (1 - miss1)
    # variance of the number of missed cells
    var = cells * miss1 + cells * (cells - 1) * miss2 - (cells * miss1) ** 2
    return float(mean), float(var)


def wolff_grid_stub(p: int, n: int, j: int) -> Configuration:
    """Grid of arithmetic progressions ``[0, p^j) x [0, p^2j)`` with slopes ``[0, p^j)``.

    Only the shape of the grid example; no sharpness is claimed for it.
    """
    if not 1 <= j or 2 * j > n:
        raise GeometryError(f"need 1 <= j and 2j <= n, got j={j}, n={n}")
    amb = Ambient(p, n)
    return product_config(amb, range(p**j), range(p ** (2 * j)), range(p**j))


@dataclass(frozen=True)
class StrongSpacingReport:
    ratio: float
    exact: PValue
    level: int
    cell: Cube


def strong_spacing_ratio(P: CubeSet, s: Exponent) -> StrongSpacingReport:
    """Max over scales ``rho`` and cells of ``|P cap Q| / max(rho^(2-s)|P|, (rho/delta)^s)``."""
    n = P.level
    total = P.n_distinct
    comp = s.complement(2)
    best = None
    for m in range(n + 1):
        counts = fiber_counts(P, m)
        top = max(counts.values())
        cell = min(c for c, v in counts.items() if v == top)
        denom = max(comp.power(-m) * total, s.power(n - m))
        r = PValue(s.p, top) / denom
        if best is None or r > best[0]:
            best = (r, m, cell)
    r, m, cell = best
    return StrongSpacingReport(float(r), r, m, cell)


def digit_grid(p: int, max_digits: int | None = None) -> list[tuple[int, ...]]:
    """Initial digit sets ``{0..k-1}`` for ``k = 1..p`` (or up to ``max_digits``)."""
    top = p if max_digits is None else min(p, max_digits)
    return [tuple(range(k)) for k in range(1, top + 1)]


__all__ = [
    "DigitSet",
    "cantor_1d",
    "product_config",
    "cantor_product_config",
    "make_rng",
    "random_config",
    "random_weighted_instance",
    "expected_coarse_cover",
    "wolff_grid_stub",
    "StrongSpacingReport",
    "strong_spacing_ratio",
    "digit_grid",
]
