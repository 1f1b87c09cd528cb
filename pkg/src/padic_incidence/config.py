"""Cube/tube configurations and their line-oriented text format.

Format::

    p n
    p^m:(x,y)                      # a cube of P
    p^m:[a,b]                      # a tube of T outside every family
    p^m:(x,y) -> p^m:[a,b],...     # the family T(cube)

Blank lines and ``#`` comments are ignored.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .geometry import (
    Ambient,
    Cube,
    CubeSet,
    GeometryError,
    Tube,
    TubeSet,
    parse_cube,
    parse_tube,
    tube_contains,
)


@dataclass(frozen=True)
class Configuration:
    """Cubes ``P``, tubes ``T`` and per-cube families ``T(cube)`` of tubes through it."""

    ambient: Ambient
    cubes: tuple[Cube, ...]
    assoc: Mapping[Cube, tuple[Tube, ...]] = field(compare=False)
    extra_tubes: tuple[Tube, ...] = ()

    def __post_init__(self):
        cubes = tuple(sorted(set(self.cubes)))
        object.__setattr__(self, "cubes", cubes)
        members = set(cubes)
        assoc = {}
        for c, fam in self.assoc.items():
            if c not in members:
                raise GeometryError(f"family attached to {c}, which is not in P")
            fam = tuple(sorted(set(fam)))
            for t in fam:
                if not tube_contains(t, c):
                    raise GeometryError(f"{t} does not contain {c}")
            assoc[c] = fam
        for c in cubes:
            assoc.setdefault(c, ())
            if c.p != self.ambient.p or c.level != self.ambient.n:
                raise GeometryError(f"{c} is not a level-{self.ambient.n} cube")
        object.__setattr__(self, "assoc", assoc)
        object.__setattr__(self, "extra_tubes", tuple(sorted(set(self.extra_tubes))))

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.ambient == other.ambient
            and self.cubes == other.cubes
            and dict(self.assoc) == dict(other.assoc)
            and self.tubes == other.tubes
        )

    __hash__ = None

    @property
    def P(self) -> CubeSet:
        return CubeSet.of(self.ambient, self.cubes, level=self.ambient.n)

    @property
    def tubes(self) -> tuple[Tube, ...]:
        union = set(self.extra_tubes)
        for fam in self.assoc.values():
            union.update(fam)
        return tuple(sorted(union))

    @property
    def T(self) -> TubeSet:
        return TubeSet.of(self.ambient, self.tubes, level=self.ambient.n)

    def family(self, c: Cube) -> TubeSet:
        return TubeSet.of(self.ambient, self.assoc[c], level=self.ambient.n)

    def family_sizes(self) -> dict[Cube, int]:
        return {c: len(self.assoc[c]) for c in self.cubes}

    def mass(self) -> int:
        """Total family size ``sum |T(cube)|``."""
        return sum(len(f) for f in self.assoc.values())

    def multiplicity(self) -> dict[Tube, int]:
        """``|{cube : t in T(cube)}|`` for each tube in some family."""
        out: dict[Tube, int] = {}
        for fam in self.assoc.values():
            for t in fam:
                out[t] = out.get(t, 0) + 1
        return out

    def restrict(self, keep_cube=None, keep_tube=None) -> "Configuration":
        """Sub-configuration: cubes passing ``keep_cube``; family tubes passing ``keep_tube(cube, tube)``."""
        cubes = [c for c in self.cubes if keep_cube is None or keep_cube(c)]
        assoc = {
            c: tuple(t for t in self.assoc[c] if keep_tube is None or keep_tube(c, t))
            for c in cubes
        }
        return Configuration(self.ambient, tuple(cubes), assoc)

    # -- text format ----------------------------------------------------------

    def dumps(self) -> str:
        lines = [f"{self.ambient.p} {self.ambient.n}"]
        lines += [str(c) for c in self.cubes]
        in_family = {t for fam in self.assoc.values() for t in fam}
        lines += [str(t) for t in self.extra_tubes if t not in in_family]
        for c in self.cubes:
            fam = self.assoc[c]
            if fam:
                lines.append(f"{c} -> " + ",".join(map(str, fam)))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Configuration":
        rows = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        rows = [r for r in rows if r]
        if not rows:
            raise GeometryError("empty configuration text")
        try:
            p, n = map(int, rows[0].split())
        except ValueError:
            raise GeometryError(f"bad header {rows[0]!r}; expected 'p n'") from None
        amb = Ambient(p, n)
        cubes: list[Cube] = []
        extra: list[Tube] = []
        assoc: dict[Cube, list[Tube]] = {}
        for row in rows[1:]:
            if "->" in row:
                lhs, rhs = row.split("->", 1)
                c = parse_cube(lhs)
                fam = [parse_tube(t) for t in _split_tubes(rhs)]
                assoc.setdefault(c, []).extend(fam)
                if c not in cubes:
                    cubes.append(c)
            elif "(" in row:
                cubes.append(parse_cube(row))
            else:
                extra.append(parse_tube(row))
        return cls(amb, tuple(cubes), {c: tuple(f) for c, f in assoc.items()}, tuple(extra))


def _split_tubes(text: str) -> list[str]:
    # tube literals contain a comma inside their brackets
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        out.append("".join(cur))
    return out


def from_families(amb: Ambient, families: Mapping[Cube, Iterable[Tube]]) -> Configuration:
    return Configuration(amb, tuple(families), {c: tuple(f) for c, f in families.items()})
