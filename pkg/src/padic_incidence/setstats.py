"""Covering numbers, spacing certificates, uniformity and box-dimension fits."""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exact import Exponent, PValue
from .geometry import Cube, GeometryError, Tube, _Multiset, parent

FROSTMAN = "frostman"
KATZ_TAO = "katz-tao"


def covering_number(P: _Multiset, level: int) -> int:
    """Number of distinct level-``level`` ancestors of ``P`` (multiplicity ignored)."""
    if level > P.level:
        raise GeometryError(f"target level {level} finer than set level {P.level}")
    return len({parent(o, level) for o in P.distinct()})


def fiber_counts(P: _Multiset, level: int) -> Counter:
    """Distinct-element count of ``P`` inside each level-``level`` cell."""
    return Counter(parent(o, level) for o in P.distinct())


@dataclass(frozen=True)
class SpacingCertificate:
    kind: str
    s: Exponent
    C_min: PValue
    witness_level: int
    witness: Cube | Tube

    def record(self) -> str:
        """Flat ``key=value`` text record."""
        return (
            f"kind={self.kind} s={self.s} C_min={self.C_min.coef} "
            f"C_min_pexp={self.C_min.exp} witness_level={self.witness_level} "
            f"witness={self.witness}"
        )

    def bound_holds(self, P: _Multiset, C: PValue | Fraction) -> bool:
        """Re-evaluate the spacing inequality for every scale with constant ``C``."""
        total = P.n_distinct
        for m in range(P.level + 1):
            for cnt in fiber_counts(P, m).values():
                if PValue(self.s.p, cnt) > C * _scale_factor(self.kind, self.s, m, P.level, total):
                    return False
        return True


def parse_certificate(text: str) -> dict[str, str]:
    return dict(tok.split("=", 1) for tok in text.split())


def _scale_factor(kind: str, s: Exponent, m: int, n: int, total: int) -> PValue:
    # Frostman: r^s |P|; Katz-Tao: (r/delta)^s, with r = p^-m, delta = p^-n.
    if kind == FROSTMAN:
        return s.power(-m) * total
    return s.power(n - m)


def _certificate(kind: str, P: _Multiset, s: Exponent) -> SpacingCertificate:
    if P.n_distinct == 0:
        raise GeometryError("spacing certificate of an empty set")
    if s.p != P.ambient.p:
        raise GeometryError("exponent base differs from the ambient prime")
    total = P.n_distinct
    best: tuple[PValue, int, object] | None = None
    for m in range(P.level + 1):
        counts = fiber_counts(P, m)
        # the largest fiber is the only candidate at this scale
        top = max(counts.values())
        cell = min(c for c, v in counts.items() if v == top)
        ratio = PValue(s.p, top) / _scale_factor(kind, s, m, P.level, total)
        if best is None or ratio > best[0]:
            best = (ratio, m, cell)
    ratio, m, cell = best
    return SpacingCertificate(kind, s, ratio, m, cell)


def frostman_certificate(P: _Multiset, s: Exponent) -> SpacingCertificate:
    """Minimal ``C`` with ``|P cap Q| <= C r^s |P|`` for every scale ``r`` and cell ``Q``.

    Works for tube sets through duality: tubes are treated as parameter cubes.
    """
    return _certificate(FROSTMAN, P, s)


def katz_tao_certificate(P: _Multiset, s: Exponent) -> SpacingCertificate:
    """Minimal ``C`` with ``|P cap Q| <= C (r/delta)^s``."""
    return _certificate(KATZ_TAO, P, s)


# -- uniformity --------------------------------------------------------------


def count_class(count: int, p: int) -> int:
    """Index ``i`` with ``p^(i-1) <= count < p^i``; the class bound is ``N = p^i``."""
    if count < 1:
        raise ValueError("class of a non-positive count")
    i = 0
    bound = 1
    while bound <= count:
        bound *= p
        i += 1
    return i


@dataclass(frozen=True)
class BranchingProfile:
    """Branching classes ``N_j = p^(exponents[j-1])`` along a scale ladder."""

    p: int
    ladder: tuple[int, ...]
    exponents: tuple[int, ...]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(self.p**e for e in self.exponents)

    @property
    def block(self) -> int | None:
        steps = {b - a for a, b in zip(self.ladder, self.ladder[1:])}
        return steps.pop() if len(steps) == 1 else None


def block_ladder(block: int, levels: int) -> tuple[int, ...]:
    return tuple(j * block for j in range(levels + 1))


def _check_ladder(P: _Multiset, ladder: Sequence[int]) -> tuple[int, ...]:
    ladder = tuple(ladder)
    if len(ladder) < 2 or ladder[0] != 0 or ladder[-1] != P.level:
        raise GeometryError(f"ladder {ladder} must run from 0 to the set level {P.level}")
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise GeometryError(f"ladder {ladder} is not strictly increasing")
    return ladder


def branching_classes(P: _Multiset, ladder: Sequence[int]) -> list[dict]:
    """Per ladder step ``j``: map from each coarse cell to the class of its child count."""
    ladder = _check_ladder(P, ladder)
    out = []
    for coarse, fine in zip(ladder, ladder[1:]):
        children = defaultdict(set)
        for o in P.distinct():
            children[parent(o, coarse)].add(parent(o, fine))
        out.append({q: count_class(len(ch), P.ambient.p) for q, ch in children.items()})
    return out


def uniformity_check(
    P: _Multiset, block: int | None = None, levels: int | None = None, *, ladder=None
) -> tuple[bool, BranchingProfile | None]:
    """Test whether every cell at each ladder step has child counts in one class.

    Pass either ``block``/``levels`` (ladder ``0, T, ..., NT``) or an explicit ladder.
    """
    if ladder is None:
        if block is None or levels is None:
            raise GeometryError("give block and levels, or a ladder")
        if block < 1 or P.level % block or block * levels != P.level:
            raise GeometryError(f"set level {P.level} is not {levels} blocks of {block}")
        ladder = block_ladder(block, levels)
    if P.n_distinct == 0:
        raise GeometryError("uniformity of an empty set")
    exps = []
    for classes in branching_classes(P, ladder):
        vals = set(classes.values())
        if len(vals) != 1:
            return False, None
        exps.append(vals.pop())
    return True, BranchingProfile(P.ambient.p, tuple(ladder), tuple(exps))


# -- box dimension -----------------------------------------------------------


@dataclass(frozen=True)
class BoxDimFit:
    levels: tuple[int, ...]
    counts: tuple[int, ...]
    slope: float
    intercept: float
    residuals: tuple[float, ...]
    exact: bool


def box_dim_fit(P: _Multiset, levels: Sequence[int] | None = None) -> BoxDimFit:
    """Least-squares slope of ``log_p |P|_{p^-m}`` against ``m``.

    ``exact`` is decided in integer arithmetic: the log-counts are collinear.
    """
    if levels is None:
        levels = range(P.level + 1)
    levels = tuple(levels)
    if len(levels) < 2:
        raise GeometryError("box_dim_fit needs at least two levels")
    if P.n_distinct == 0:
        raise GeometryError("box_dim_fit of an empty set")
    counts = tuple(covering_number(P, m) for m in levels)
    x = np.array(levels, dtype=float)
    y = np.log(np.array(counts, dtype=float)) / math.log(P.ambient.p)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    exact = all(
        Fraction(counts[j], counts[i]) ** (levels[k] - levels[j])
        == Fraction(counts[k], counts[j]) ** (levels[j] - levels[i])
        for i, j, k in zip(range(len(levels)), range(1, len(levels)), range(2, len(levels)))
    )
    if exact:
        # geometric counts: slope and intercept follow from the endpoints
        slope = math.log(counts[-1] / counts[0], P.ambient.p) / (levels[-1] - levels[0])
        intercept = math.log(counts[0], P.ambient.p) - slope * levels[0]
        resid = np.zeros_like(resid)
    return BoxDimFit(levels, counts, float(slope), float(intercept), tuple(map(float, resid)), exact)
