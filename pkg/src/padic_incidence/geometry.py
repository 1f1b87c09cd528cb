"""Residue arithmetic in Z/p^nZ and the cube/tube geometry of (Z/p^nZ)^2.

A cube at level ``m`` is a residue pair ``(x, y)`` mod ``p^m``; a tube at level
``m`` is the line ``y = a*x + b`` mod ``p^m`` and is the image of the parameter
cube ``(a, b)`` under point-line duality.  All objects are immutable.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_PRIME = 13
MAX_GRID = 2**40

_PRIMES = (2, 3, 5, 7, 11, 13)


class GeometryError(ValueError):
    """Raised on invalid levels, residues or mismatched ambients."""


def vp(x: int, p: int, cap: int) -> int:
    """p-adic valuation of ``x`` capped at ``cap`` (``x == 0`` gives ``cap``)."""
    if x == 0:
        return cap
    v = 0
    while x % p == 0 and v < cap:
        x //= p
        v += 1
    return v


@dataclass(frozen=True)
class Ambient:
    """The grid (Z/p^nZ)^2 at finest scale ``delta = p^-n``."""

    p: int
    n: int

    def __post_init__(self):
        if self.p not in _PRIMES:
            raise GeometryError(f"p must be a prime in [2, {MAX_PRIME}], got {self.p}")
        if self.n < 1:
            raise GeometryError(f"n must be >= 1, got {self.n}")
        if self.p ** (2 * self.n) > MAX_GRID:
            raise GeometryError(f"p^(2n) exceeds 2^40 for p={self.p}, n={self.n}")

    @property
    def q(self) -> int:
        return self.p**self.n

    @property
    def delta(self) -> Fraction:
        return Fraction(1, self.q)

    def modulus(self, level: int) -> int:
        self.check_level(level)
        return self.p**level

    def check_level(self, level: int) -> None:
        if not 0 <= level <= self.n:
            raise GeometryError(f"level {level} outside [0, {self.n}]")

    def cube(self, x: int, y: int, level: int | None = None) -> "Cube":
        return Cube(self.p, self.n if level is None else level, x, y)

    def tube(self, a: int, b: int, level: int | None = None) -> "Tube":
        return Tube(self.p, self.n if level is None else level, a, b)


def valuation_norm(x: int, amb: Ambient) -> int:
    """Return ``v`` with ``||x|| = p^-v``, capped at ``n`` (``v == n`` iff ``x == 0``)."""
    if not 0 <= x < amb.q:
        raise GeometryError(f"residue {x} outside [0, {amb.q})")
    return vp(x, amb.p, amb.n)


@dataclass(frozen=True, order=True)
class Cube:
    p: int
    level: int
    x: int
    y: int

    def __post_init__(self):
        if self.level < 0:
            raise GeometryError(f"negative level {self.level}")
        mod = self.p**self.level
        object.__setattr__(self, "x", self.x % mod)
        object.__setattr__(self, "y", self.y % mod)

    def __str__(self) -> str:
        return f"{self.p}^{self.level}:({self.x},{self.y})"


@dataclass(frozen=True, order=True)
class Tube:
    """The line ``y = a*x + b`` mod ``p^level``."""

    p: int
    level: int
    a: int
    b: int

    def __post_init__(self):
        if self.level < 0:
            raise GeometryError(f"negative level {self.level}")
        mod = self.p**self.level
        object.__setattr__(self, "a", self.a % mod)
        object.__setattr__(self, "b", self.b % mod)

    def __str__(self) -> str:
        return f"{self.p}^{self.level}:[{self.a},{self.b}]"

    def points(self) -> list[tuple[int, int]]:
        """All level-``level`` points on the line, ordered by ``x``."""
        mod = self.p**self.level
        return [(x, (self.a * x + self.b) % mod) for x in range(mod)]


_CUBE_RE = re.compile(r"^\s*(\d+)\^(\d+):\((\d+),(\d+)\)\s*$")
_TUBE_RE = re.compile(r"^\s*(\d+)\^(\d+):\[(\d+),(\d+)\]\s*$")


def parse_cube(text: str) -> Cube:
    m = _CUBE_RE.match(text)
    if not m:
        raise GeometryError(f"not a cube literal: {text!r}")
    p, level, x, y = map(int, m.groups())
    if x >= p**level or y >= p**level:
        raise GeometryError(f"unreduced residues in {text!r}")
    return Cube(p, level, x, y)


def parse_tube(text: str) -> Tube:
    m = _TUBE_RE.match(text)
    if not m:
        raise GeometryError(f"not a tube literal: {text!r}")
    p, level, a, b = map(int, m.groups())
    if a >= p**level or b >= p**level:
        raise GeometryError(f"unreduced residues in {text!r}")
    return Tube(p, level, a, b)


def duality(c: Cube) -> Tube:
    """Send the parameter cube ``(a, b)`` to the tube ``y = a*x + b``."""
    return Tube(c.p, c.level, c.x, c.y)


def dual_cube(t: Tube) -> Cube:
    """Inverse of :func:`duality`."""
    return Cube(t.p, t.level, t.a, t.b)


def tube_contains(t: Tube, c: Cube) -> bool:
    if t.p != c.p:
        raise GeometryError("ambient mismatch between tube and cube")
    if c.level < t.level:
        raise GeometryError(
            f"cube level {c.level} is coarser than tube level {t.level}"
        )
    mod = t.p**t.level
    return (c.y - t.a * c.x - t.b) % mod == 0


def parent(obj: Cube | Tube, level: int) -> Cube | Tube:
    """The unique ancestor of ``obj`` at the coarser ``level``."""
    if level > obj.level or level < 0:
        raise GeometryError(f"cannot take parent at level {level} of level {obj.level}")
    if level == obj.level:
        return obj
    return type(obj)(obj.p, level, *_residues(obj))


def _residues(obj: Cube | Tube) -> tuple[int, int]:
    return (obj.x, obj.y) if isinstance(obj, Cube) else (obj.a, obj.b)


def cube_distance(c1: Cube, c2: Cube) -> int | None:
    """Distance exponent ``k`` with ``dist = p^-k``; ``None`` for coincident cubes.

    Distinct cubes at level ``m`` give ``k`` in ``[0, m-1]``.
    """
    if c1.p != c2.p or c1.level != c2.level:
        raise GeometryError("cube_distance needs cubes of one ambient and level")
    if c1 == c2:
        return None
    mod = c1.p**c1.level
    return min(
        vp((c1.x - c2.x) % mod, c1.p, c1.level),
        vp((c1.y - c2.y) % mod, c1.p, c1.level),
    )


def count_common_tubes(c1: Cube, c2: Cube) -> int:
    """Number of tubes at the cubes' level containing both.

    ``dy = a*dx`` is solvable iff ``v(dx) <= v(dy)``; the slope is then free in
    its top ``v(dx)`` digits, giving ``p^v(dx)`` tubes.
    """
    if c1.p != c2.p or c1.level != c2.level:
        raise GeometryError("count_common_tubes needs cubes of one ambient and level")
    if c1 == c2:
        raise GeometryError("count_common_tubes is undefined for coincident cubes")
    p, m = c1.p, c1.level
    mod = p**m
    j = vp((c1.x - c2.x) % mod, p, m)
    if j > vp((c1.y - c2.y) % mod, p, m):
        return 0
    return p**j


def tubes_through(c: Cube, amb: Ambient | None = None) -> "TubeSet":
    """The ``p^m`` tubes at the cube's level ``m`` through ``c``, one per slope."""
    amb = amb or Ambient(c.p, max(c.level, 1))
    mod = c.p**c.level
    tubes = [Tube(c.p, c.level, a, c.y - a * c.x) for a in range(mod)]
    return TubeSet.of(amb, tubes, level=c.level)


def all_cubes(amb: Ambient, level: int | None = None) -> list[Cube]:
    level = amb.n if level is None else level
    mod = amb.modulus(level)
    return [Cube(amb.p, level, x, y) for x in range(mod) for y in range(mod)]


def all_tubes(amb: Ambient, level: int | None = None) -> list[Tube]:
    return [duality(c) for c in all_cubes(amb, level)]


# -- multisets ---------------------------------------------------------------


@dataclass(frozen=True)
class _Multiset:
    ambient: Ambient
    level: int
    items: tuple = ()
    weights: tuple[Fraction, ...] | None = field(default=None, compare=False)

    _elem: type = Cube

    def __post_init__(self):
        self.ambient.check_level(self.level)
        for obj, mult in self.items:
            if not isinstance(obj, self._elem):
                raise GeometryError(f"expected {self._elem.__name__}, got {obj!r}")
            if obj.p != self.ambient.p or obj.level != self.level:
                raise GeometryError(f"{obj} does not live at level {self.level}")
            if mult < 1:
                raise GeometryError(f"non-positive multiplicity for {obj}")
        if self.weights is not None:
            if len(self.weights) != len(self.items):
                raise GeometryError("weights must align with items")
            if any(w < 0 for w in self.weights):
                raise GeometryError("weights must be nonnegative")

    @classmethod
    def of(cls, ambient: Ambient, objs: Iterable, level: int | None = None, weights=None):
        """Build from an iterable (repeats add multiplicity).

        ``weights`` maps each distinct element to a nonnegative rational.
        """
        counts = Counter(objs)
        if level is None:
            levels = {o.level for o in counts}
            if len(levels) > 1:
                raise GeometryError(f"mixed levels {sorted(levels)}")
            level = levels.pop() if levels else ambient.n
        items = tuple(sorted(counts.items()))
        w = None
        if weights is not None:
            w = tuple(Fraction(weights.get(o, 1)) for o, _ in items)
        return cls(ambient, level, items, w)

    def __len__(self) -> int:
        return sum(m for _, m in self.items)

    def __iter__(self) -> Iterator:
        for obj, mult in self.items:
            for _ in range(mult):
                yield obj

    def __contains__(self, obj) -> bool:
        return obj in self._index

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {o: i for i, (o, _) in enumerate(self.items)}
            object.__setattr__(self, "_idx", idx)
        return idx

    @property
    def n_distinct(self) -> int:
        return len(self.items)

    def distinct(self) -> tuple:
        return tuple(o for o, _ in self.items)

    def multiplicity(self, obj) -> int:
        i = self._index.get(obj)
        return 0 if i is None else self.items[i][1]

    def weight(self, obj) -> Fraction:
        if self.weights is None:
            return Fraction(1)
        return self.weights[self._index[obj]]

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Residue columns and multiplicities as int64 arrays."""
        if not self.items:
            z = np.zeros(0, dtype=np.int64)
            return z, z.copy(), z.copy()
        arr = np.array([(*_residues(o), m) for o, m in self.items], dtype=np.int64)
        return arr[:, 0], arr[:, 1], arr[:, 2]

    def parents(self, level: int) -> "_Multiset":
        """Multiset of ancestors at ``level``, multiplicity preserved."""
        counts: Counter = Counter()
        for obj, mult in self.items:
            counts[parent(obj, level)] += mult
        return type(self)(self.ambient, level, tuple(sorted(counts.items())))

    def restrict(self, keep) -> "_Multiset":
        """Sub-multiset of elements satisfying ``keep(obj)``; weights follow."""
        idx = [i for i, (o, _) in enumerate(self.items) if keep(o)]
        w = None if self.weights is None else tuple(self.weights[i] for i in idx)
        return type(self)(self.ambient, self.level, tuple(self.items[i] for i in idx), w)


@dataclass(frozen=True)
class CubeSet(_Multiset):
    _elem: type = field(default=Cube, repr=False, compare=False)


@dataclass(frozen=True)
class TubeSet(_Multiset):
    _elem: type = field(default=Tube, repr=False, compare=False)

    def __post_init__(self):
        if self.weights is not None:
            raise GeometryError("tube sets carry no weights")
        super().__post_init__()


def cubeset_from_points(amb: Ambient, pts: Sequence[tuple[int, int]], level=None) -> CubeSet:
    level = amb.n if level is None else level
    return CubeSet.of(amb, (Cube(amb.p, level, x, y) for x, y in pts), level=level)
