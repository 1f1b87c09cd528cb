"""Incidence counts, tube thickening, rich-tube statistics and tubelets."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .config import Configuration
from .exact import PValue
from .geometry import (
    Cube,
    CubeSet,
    GeometryError,
    Tube,
    TubeSet,
    count_common_tubes,
    parent,
)


def _check_same_ambient(P, T) -> None:
    if P.ambient != T.ambient:
        raise GeometryError(f"ambient mismatch {P.ambient} vs {T.ambient}")


def tubes_per_cube(P: CubeSet, T: TubeSet) -> np.ndarray:
    """For each distinct cube of ``P``, the number of tubes of ``T`` (with multiplicity) containing it."""
    _check_same_ambient(P, T)
    if T.level > P.level:
        raise GeometryError(f"tubes at level {T.level} are finer than cubes at {P.level}")
    xs, ys, _ = P.arrays()
    out = np.zeros(len(xs), dtype=np.int64)
    mod = P.ambient.p**T.level
    by_slope: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for t, mult in T.items:
        by_slope[t.a].append((t.b, mult))
    for a, entries in by_slope.items():
        table = np.zeros(mod, dtype=np.int64)
        for b, mult in entries:
            table[b] += mult
        out += table[(ys - a * xs) % mod]
    return out


def incidence_count(P: CubeSet, T: TubeSet) -> Fraction:
    """Weighted incidences ``sum_p sum_{T contains p} w(p)``, both sides with multiplicity."""
    per = tubes_per_cube(P, T)
    total = Fraction(0)
    for (c, mult), k in zip(P.items, per.tolist()):
        if k:
            total += P.weight(c) * mult * k
    return total


def thicken_tubes(T: TubeSet, k: int) -> TubeSet:
    """The multiset of ancestors ``k`` levels up; total multiplicity is preserved."""
    if not 0 <= k < T.level:
        raise GeometryError(f"thickening index {k} must lie in [0, {T.level})")
    return T.parents(T.level - k)


# -- rich tubes --------------------------------------------------------------


def _cell_ids(xs: np.ndarray, ys: np.ndarray, p: int, level: int) -> np.ndarray:
    mod = p**level
    return (xs % mod) * mod + (ys % mod)


def n_delta_b(t: Tube, P: CubeSet, delta_level: int, b: int) -> int:
    """Number of level-``delta_level`` cells ``Q`` with ``|t cap Q cap P| >= b`` (with multiplicity)."""
    if b < 1:
        raise GeometryError("b must be >= 1")
    if t.level > P.level or delta_level > P.level:
        raise GeometryError("tube and cell levels must not exceed the cube level")
    xs, ys, mult = P.arrays()
    mod = P.ambient.p**t.level
    on = (ys - t.a * xs - t.b) % mod == 0
    cells = _cell_ids(xs[on], ys[on], P.ambient.p, delta_level)
    if cells.size == 0:
        return 0
    _, inv = np.unique(cells, return_inverse=True)
    counts = np.bincount(inv, weights=mult[on]).astype(np.int64)
    return int((counts >= b).sum())


def _per_slope_cell_counts(P: CubeSet, delta_level: int, a: int):
    """For slope ``a``: intercepts, and per-(intercept, cell) point counts."""
    xs, ys, mult = P.arrays()
    q = P.ambient.p**P.level
    bs = (ys - a * xs) % q
    cells = _cell_ids(xs, ys, P.ambient.p, delta_level)
    ncell = P.ambient.p ** (2 * delta_level)
    keys = bs * ncell + cells
    uk, inv = np.unique(keys, return_inverse=True)
    counts = np.bincount(inv, weights=mult).astype(np.int64)
    return uk // ncell, counts


def _all_tube_stats(P: CubeSet, delta_level: int, b: int, slopes: Iterable[int]):
    """Yield ``(a, intercepts, N values, pair counts)`` per slope over tubes meeting ``P``.

    ``pair counts`` is the number of ordered pairs of points of ``P`` on the tube
    in different cells.
    """
    for a in slopes:
        tb, counts = _per_slope_cell_counts(P, delta_level, a)
        if tb.size == 0:
            continue
        ub, inv = np.unique(tb, return_inverse=True)
        nvals = np.bincount(inv, weights=(counts >= b)).astype(np.int64)
        tot = np.bincount(inv, weights=counts).astype(np.int64)
        sq = np.bincount(inv, weights=counts * counts).astype(np.int64)
        yield a, ub, nvals, tot * tot - sq


def triple_count_J(P: CubeSet, delta_level: int) -> int:
    """Ordered triples ``(p1, p2, T)`` with ``p1``, ``p2`` in different cells and both on ``T``.

    Counted tube by tube over every level-n tube and checked against the
    pair-by-pair sum of :func:`count_common_tubes`.
    """
    tube_side = triple_count_J_tubes(P, delta_level)
    pair_side = triple_count_J_pairs(P, delta_level)
    if tube_side != pair_side:
        raise AssertionError(f"J mismatch: tubes {tube_side} vs pairs {pair_side}")
    return tube_side


def triple_count_J_tubes(P: CubeSet, delta_level: int) -> int:
    _check_delta(P, delta_level)
    total = 0
    for _, _, _, pairs in _all_tube_stats(P, delta_level, 1, range(P.ambient.p**P.level)):
        total += int(pairs.sum())
    return total


def triple_count_J_pairs(P: CubeSet, delta_level: int) -> int:
    _check_delta(P, delta_level)
    items = P.items
    total = 0
    for i, (c1, m1) in enumerate(items):
        par1 = parent(c1, delta_level)
        for c2, m2 in items[i + 1 :]:
            if parent(c2, delta_level) == par1:
                continue
            total += 2 * m1 * m2 * count_common_tubes(c1, c2)
    return total


def _check_delta(P: CubeSet, delta_level: int) -> None:
    if not 0 <= delta_level <= P.level:
        raise GeometryError(f"cell level {delta_level} outside [0, {P.level}]")


@dataclass(frozen=True)
class RichTubeStats:
    delta_level: int
    a: int
    b: int
    tubes: tuple[tuple[Tube, int], ...]
    sum_squares: int
    J: int
    spacing_ok: dict = field(default_factory=dict, compare=False)
    frostman_K: Fraction | None = None

    @property
    def count(self) -> int:
        return len(self.tubes)

    def measured_constant(self, P: CubeSet) -> float | None:
        """Ratio ``|T_ab| / (K log(1/Delta) |P|^2 / (a^2 b^2))``; ``None`` when undefined."""
        if self.frostman_K is None or self.delta_level == 0 or len(P) == 0:
            return None
        log_inv_delta = self.delta_level * math.log(P.ambient.p)
        denom = float(self.frostman_K) * log_inv_delta * len(P) ** 2
        return self.count * self.a**2 * self.b**2 / denom


def spacing_counts(P: CubeSet, t: Tube, level: int) -> int:
    """``|t^rho cap D_rho(P)|``: level-``level`` cells of ``P`` contained in the ancestor of ``t``."""
    mod = P.ambient.p**level
    cells = {parent(c, level) for c in P.distinct()}
    return sum(1 for c in cells if (c.y - t.a * c.x - t.b) % mod == 0)


def spacing_ok(P: CubeSet, t: Tube, delta_level: int, eps: Fraction) -> bool:
    """``|t^rho cap D_rho(P)| <= Delta^-eps * rho * |D_rho(P)|`` for every level in ``[1, Delta]``."""
    p = P.ambient.p
    for r in range(1, delta_level + 1):
        ncells = len({parent(c, r) for c in P.distinct()})
        bound = PValue(p, ncells, Fraction(delta_level) * eps - r)
        if PValue(p, spacing_counts(P, t, r)) > bound:
            return False
    return True


def delta_frostman_constant(P: CubeSet, delta_level: int) -> Fraction:
    """Least ``K`` with ``|P cap Q| <= K r |P|`` for ``Delta <= r <= 1`` (with multiplicity)."""
    total = len(P)
    best = Fraction(0)
    for r in range(delta_level + 1):
        cnt: dict = defaultdict(int)
        for c, m in P.items:
            cnt[parent(c, r)] += m
        best = max(best, Fraction(max(cnt.values()) * P.ambient.p**r, total))
    return best


def rich_tubes(
    P: CubeSet,
    delta_level: int,
    a: int,
    b: int,
    candidates: Sequence[Tube] | None = None,
    eps: Fraction | None = None,
) -> RichTubeStats:
    """Tubes with ``N_{Delta,b}(T) >= a`` among all level-n tubes (or ``candidates``).

    Also returns ``sum_{N >= 2} N^2`` and the triple count ``J`` over all tubes.
    """
    if a < 1 or b < 1:
        raise GeometryError("a and b must be >= 1")
    _check_delta(P, delta_level)
    q = P.ambient.p**P.level
    found: list[tuple[Tube, int]] = []
    sum_sq = 0
    J = 0
    cand = None if candidates is None else set(candidates)
    for slope, ub, nvals, pairs in _all_tube_stats(P, delta_level, b, range(q)):
        J += int(pairs.sum())
        big = nvals >= 2
        sum_sq += int((nvals[big] ** 2).sum())
        for b0, nv in zip(ub[nvals >= a].tolist(), nvals[nvals >= a].tolist()):
            t = Tube(P.ambient.p, P.level, slope, b0)
            if cand is None or t in cand:
                found.append((t, nv))
    found.sort()
    ok = {}
    if eps is not None:
        ok = {t: spacing_ok(P, t, delta_level, Fraction(eps)) for t, _ in found}
    return RichTubeStats(
        delta_level, a, b, tuple(found), sum_sq, J, ok, delta_frostman_constant(P, delta_level)
    )


# -- tubelets ----------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Tubelet:
    """The intersection of a level-n tube with a level-``w`` cube ``Q``.

    Keyed by ``Q``, the slope mod ``p^(n-w)`` and the anchor ``a*x_Q + b mod p^n``
    at the canonical lift ``x_Q`` of ``Q.x``.
    """

    Q: Cube
    slope_class: int
    anchor: int


def tubelet_of(t: Tube, Q: Cube) -> Tubelet | None:
    """``t cap Q`` as a :class:`Tubelet`, or ``None`` when they are disjoint."""
    mod_w = t.p**Q.level
    if (Q.y - t.a * Q.x - t.b) % mod_w:
        return None
    q = t.p**t.level
    return Tubelet(Q, t.a % (t.p ** (t.level - Q.level)), (t.a * Q.x + t.b) % q)


@dataclass(frozen=True)
class TubeletEntry:
    tubelet: Tubelet
    N: int
    m: int


def tubelet_decompose(
    T: TubeSet, P: CubeSet, w_level: int, delta_level: int, b: int
) -> list[TubeletEntry]:
    """Tubelets ``T cap Q`` for ``Q`` in ``D_w(P)`` with ``N_{Delta,b}(u)`` and ``m(u)``."""
    _check_same_ambient(P, T)
    if not 0 <= w_level <= P.level or not 0 <= delta_level <= P.level:
        raise GeometryError("w and Delta levels must lie in [0, n]")
    if b < 1:
        raise GeometryError("b must be >= 1")
    Qs = sorted({parent(c, w_level) for c in P.distinct()})
    mult: dict[Tubelet, int] = defaultdict(int)
    rep: dict[Tubelet, Tube] = {}
    for t, mt in T.items:
        for Q in Qs:
            u = tubelet_of(t, Q)
            if u is not None:
                mult[u] += mt
                rep.setdefault(u, t)
    out = []
    for u in sorted(mult):
        t = rep[u]
        mod_w = P.ambient.p**w_level
        mod_t = P.ambient.p**t.level
        cells: dict[Cube, int] = defaultdict(int)
        for c, mc in P.items:
            if (c.x - u.Q.x) % mod_w == 0 and (c.y - u.Q.y) % mod_w == 0 and (
                c.y - t.a * c.x - t.b
            ) % mod_t == 0:
                cells[parent(c, delta_level)] += mc
        out.append(TubeletEntry(u, sum(1 for v in cells.values() if v >= b), mult[u]))
    return out


# -- bad tubes ---------------------------------------------------------------


@dataclass(frozen=True)
class FilterStats:
    theta: float
    n_bad: int
    retained_cubes: float
    retained_mass: float
    max_multiplicity: int


def bad_tube_filter(cfg: Configuration, theta: float) -> tuple[Configuration, FilterStats]:
    """Drop tubes shared by at least ``theta`` families, then cubes that lost over half their family."""
    if theta < 1:
        raise GeometryError("theta must be >= 1")
    mult = cfg.multiplicity()
    bad = {t for t, k in mult.items() if k >= theta}
    kept = {c: tuple(t for t in cfg.assoc[c] if t not in bad) for c in cfg.cubes}
    survivors = [c for c in cfg.cubes if 2 * len(kept[c]) >= len(cfg.assoc[c])]
    out = Configuration(cfg.ambient, tuple(survivors), {c: kept[c] for c in survivors})
    new_mult = out.multiplicity()
    stats = FilterStats(
        float(theta),
        len(bad),
        len(survivors) / len(cfg.cubes) if cfg.cubes else 1.0,
        out.mass() / cfg.mass() if cfg.mass() else 1.0,
        max(new_mult.values(), default=0),
    )
    return out, stats
