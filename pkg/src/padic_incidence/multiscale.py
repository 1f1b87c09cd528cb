"""Nice configurations, pigeonhole uniformization, refinements and the Delta-scale build.

Every pigeonhole step buckets counts into ``p``-power classes ``[p^(i-1), p^i)``,
keeps the class carrying the most mass, and breaks ties toward the smaller
class index.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from .config import Configuration
from .exact import Exponent, PValue
from .geometry import (
    Ambient,
    Cube,
    CubeSet,
    GeometryError,
    Tube,
    TubeSet,
    _Multiset,
    parent,
)
from .setstats import (
    BranchingProfile,
    _check_ladder,
    block_ladder,
    count_class,
    covering_number,
    frostman_certificate,
    uniformity_check,
)


def default_slack(amb: Ambient) -> Fraction:
    """``(log_p(1/delta) + 1)^3``, the per-stage polylog allowance."""
    return Fraction(amb.n + 1) ** 3


def pigeonhole(
    groups: Mapping[Hashable, int], mass: Mapping[Hashable, int | Fraction], p: int
) -> tuple[int, set]:
    """Pick the count class carrying the most mass.

    ``groups`` maps keys to positive counts; returns the winning class index and
    the keys in it.
    """
    by_class: dict[int, int | Fraction] = defaultdict(int)
    members: dict[int, set] = defaultdict(set)
    for key, cnt in groups.items():
        cls = count_class(cnt, p)
        by_class[cls] += mass[key]
        members[cls].add(key)
    if not by_class:
        raise GeometryError("pigeonhole over an empty collection")
    best = max(by_class.values())
    cls = min(c for c, v in by_class.items() if v == best)
    return cls, members[cls]


# -- nice configurations -----------------------------------------------------


@dataclass(frozen=True)
class NiceCertificate:
    s: Exponent
    C: PValue
    M_min: int
    M_max: int
    sigma: Fraction
    per_family_C: Mapping[Cube, PValue] = field(compare=False, repr=False)

    @property
    def similar_factor(self) -> Fraction:
        return Fraction(self.M_max, self.M_min)

    @property
    def sizes_similar(self) -> bool:
        return self.M_max <= self.sigma * self.M_min

    def lower_bound_holds(self, amb: Ambient) -> bool:
        """``M_min >= C^-1 delta^-s``, implied by the spacing property of each family."""
        return PValue(amb.p, self.M_min) * self.C >= self.s.power(amb.n)


def nice_certify(cfg: Configuration, s: Exponent, sigma: Fraction | int = 2) -> NiceCertificate:
    """Frostman constants of every family (in tube-parameter space) and the family-size range."""
    per = {}
    sizes = []
    for c in cfg.cubes:
        fam = cfg.assoc[c]
        if not fam:
            raise GeometryError(f"empty family at {c}")
        per[c] = frostman_certificate(cfg.family(c), s).C_min
        sizes.append(len(fam))
    if not per:
        raise GeometryError("configuration has no cubes")
    C = max(per.values(), key=_PKey)
    return NiceCertificate(s, C, min(sizes), max(sizes), Fraction(sigma), per)


class _PKey:
    # adapter so max() uses exact PValue ordering
    def __init__(self, v: PValue):
        self.v = v

    def __lt__(self, other):
        return self.v < other.v


# -- uniformization ----------------------------------------------------------


@dataclass(frozen=True)
class Stage:
    name: str
    kept_class: int | None
    retained: float


@dataclass(frozen=True)
class UniformizeResult:
    P: _Multiset
    profile: BranchingProfile
    ratio: Fraction
    guaranteed: Fraction
    paper_bound: Fraction | None
    stages: tuple[Stage, ...]

    @property
    def paper_bound_ok(self) -> bool | None:
        return None if self.paper_bound is None else self.ratio >= self.paper_bound


def uniformize(
    P: _Multiset, block: int | None = None, levels: int | None = None, *, ladder=None
) -> UniformizeResult:
    """Largest-mass uniform subset found greedily, finest ladder step first.

    At each step the coarse cells are bucketed by the class of their child
    count; only cells in the heaviest class survive.  Removing whole cells at
    a coarse step leaves finer steps uniform, so the output is uniform.
    """
    if ladder is None:
        if block is None or levels is None:
            raise GeometryError("give block and levels, or a ladder")
        if block < 1 or block * levels != P.level:
            raise GeometryError(f"set level {P.level} is not {levels} blocks of {block}")
        ladder = block_ladder(block, levels)
    ladder = _check_ladder(P, ladder)
    if P.n_distinct == 0:
        raise GeometryError("uniformize of an empty set")
    p = P.ambient.p
    current = set(P.distinct())
    stages = []
    for j in range(len(ladder) - 1, 0, -1):
        coarse, fine = ladder[j - 1], ladder[j]
        children: dict = defaultdict(set)
        mass: dict = defaultdict(int)
        for o in current:
            Q = parent(o, coarse)
            children[Q].add(parent(o, fine))
            mass[Q] += 1
        before = len(current)
        cls, keep = pigeonhole({Q: len(ch) for Q, ch in children.items()}, mass, p)
        current = {o for o in current if parent(o, coarse) in keep}
        stages.append(Stage(f"level {fine} in {coarse}", cls, len(current) / before))
    out = P.restrict(lambda o: o in current)
    ok, profile = uniformity_check(out, ladder=ladder)
    assert ok, "greedy uniformization produced a non-uniform set"
    nsteps = len(ladder) - 1
    steps = {b - a for a, b in zip(ladder, ladder[1:])}
    guaranteed = Fraction(1)
    for a, b in zip(ladder, ladder[1:]):
        guaranteed /= 2 * (b - a) + 1
    paper = None
    if len(steps) == 1:
        T = steps.pop()
        paper = Fraction(1, (p * T) ** nsteps)
    ratio = Fraction(out.n_distinct, P.n_distinct)
    return UniformizeResult(out, profile, ratio, guaranteed, paper, tuple(reversed(stages)))


# -- refinements -------------------------------------------------------------

PLAIN = "plain"
AT_RESOLUTION = "at-resolution"
NICE = "nice"


@dataclass(frozen=True)
class RefinementReport:
    kind: str
    covering_ratio: Fraction
    slack: Fraction
    valid: bool
    mass_ratio: Fraction | None = None
    family_factors: tuple[Fraction, ...] = ()
    detail: str = ""

    @property
    def min_family_factor(self) -> Fraction | None:
        return min(self.family_factors) if self.family_factors else None


def refinement_check(
    P_sub: CubeSet, P: CubeSet, delta_level: int | None = None, slack: Fraction | None = None
) -> RefinementReport:
    """Is ``P_sub`` a refinement of ``P`` (plain, or at resolution ``Delta`` when given)?"""
    if P_sub.ambient != P.ambient or P_sub.level != P.level:
        raise GeometryError("refinement_check needs sets of one ambient and level")
    full = set(P.distinct())
    sub = set(P_sub.distinct())
    if not sub <= full:
        raise GeometryError("P' is not contained in P")
    slack = default_slack(P.ambient) if slack is None else Fraction(slack)
    ratio = Fraction(len(sub), len(full)) if full else Fraction(1)
    if delta_level is None:
        return RefinementReport(PLAIN, ratio, slack, ratio > 0 and ratio * slack >= 1)
    parents_sub = {parent(c, delta_level) for c in sub}
    broken = [
        bp for bp in parents_sub if any(parent(c, delta_level) == bp and c not in sub for c in full)
    ]
    nparents = covering_number(P, delta_level)
    pratio = Fraction(len(parents_sub), nparents)
    valid = not broken and pratio > 0 and pratio * slack >= 1
    detail = f"{len(broken)} partial fibers" if broken else ""
    return RefinementReport(AT_RESOLUTION, ratio, slack, valid, pratio, (), detail)


def config_refinement_check(
    cfg: Configuration, cfg0: Configuration, cert0: NiceCertificate, slack: Fraction | None = None
) -> RefinementReport:
    """Configuration refinement test: sub-cubes, sub-families, and enough total family mass."""
    slack = default_slack(cfg0.ambient) if slack is None else Fraction(slack)
    if not set(cfg.cubes) <= set(cfg0.cubes):
        raise GeometryError("refined cubes are not contained in the original")
    for c in cfg.cubes:
        if not set(cfg.assoc[c]) <= set(cfg0.assoc[c]):
            raise GeometryError(f"family at {c} is not a subfamily of the original")
    cov = Fraction(len(cfg.cubes), len(cfg0.cubes))
    mass = Fraction(cfg.mass(), len(cfg0.cubes) * cert0.M_max)
    factors = tuple(Fraction(len(cfg.assoc[c]), len(cfg0.assoc[c])) for c in cfg.cubes)
    valid = cov * slack >= 1 and mass * slack >= 1
    nice = valid and bool(factors) and min(factors) * slack >= 1
    return RefinementReport(NICE if nice else PLAIN, cov, slack, valid, mass, factors)


def nice_refine(
    cfg0: Configuration,
    cert0: NiceCertificate,
    cfg: Configuration,
    slack: Fraction | None = None,
) -> tuple[Configuration, RefinementReport]:
    """Pigeonhole cubes of a refinement by family-size class, keeping the heaviest class."""
    pre = config_refinement_check(cfg, cfg0, cert0, slack)
    if not pre.valid:
        raise GeometryError(
            f"input is not a refinement (cover {pre.covering_ratio}, mass {pre.mass_ratio})"
        )
    sizes = {c: len(cfg.assoc[c]) for c in cfg.cubes if cfg.assoc[c]}
    _, keep = pigeonhole(sizes, sizes, cfg0.ambient.p)
    out = cfg.restrict(lambda c: c in keep)
    rep = config_refinement_check(out, cfg0, cert0, slack)
    mass_in = cfg.mass()
    return out, RefinementReport(
        rep.kind,
        rep.covering_ratio,
        rep.slack,
        rep.valid,
        Fraction(out.mass(), mass_in) if mass_in else Fraction(1),
        rep.family_factors,
        f"mass vs original {rep.mass_ratio}",
    )


# -- new scale ---------------------------------------------------------------


@dataclass(frozen=True)
class CoverReport:
    cover_sum: int
    baseline: int
    ratio: Fraction
    mass_identity: Mapping[Cube, Fraction] = field(compare=False)
    common_m: int = 0
    common_X: int = 0
    stages: tuple[Stage, ...] = ()
    slack: Fraction = Fraction(1)

    def identity_within(self, slack: Fraction | None = None) -> bool:
        """Each cell's ``X |T1(cell)| / (|P1 cap cell| m)`` lies in ``[1/slack, slack]``."""
        slack = self.slack if slack is None else Fraction(slack)
        return all(1 <= r * slack and r <= slack for r in self.mass_identity.values())


def cover_sum(cfg: Configuration, cfg_delta: Configuration) -> int:
    """``sum_q sum_{p in q} sum_{BT in T^Delta(q)} |T(p) cap BT|`` over the coarse configuration."""
    m = cfg_delta.ambient.n
    total = 0
    by_cell: dict[Cube, list[Cube]] = defaultdict(list)
    for c in cfg.cubes:
        by_cell[parent(c, m)].append(c)
    for bq in cfg_delta.cubes:
        fam_d = set(cfg_delta.assoc[bq])
        for c in by_cell.get(bq, ()):
            total += sum(1 for t in cfg.assoc[c] if parent(t, m) in fam_d)
    return total


def _uniformize_cube_family(fam: TubeSet, ladder) -> tuple[Tube, ...]:
    return uniformize(fam, ladder=ladder).P.distinct()


def build_scale_delta(
    cfg: Configuration, delta_level: int, s: Exponent, slack: Fraction | None = None
) -> tuple[Configuration, Configuration, CoverReport]:
    """Refine ``cfg`` so that its ``Delta``-parents form a nice configuration.

    Stages: uniformize each family on ``{1, Delta, delta}``; pigeonhole a common
    class for the number ``m`` of Delta-tubes per family; uniformize the cubes;
    inside every Delta-cell keep the Delta-tubes whose multiplicity lies in the
    heaviest class ``X``; pigeonhole a common ``X`` across cells; restrict each
    family to tubes whose Delta-parent survived.
    """
    amb = cfg.ambient
    n, m, p = amb.n, delta_level, amb.p
    if not 0 < m < n:
        raise GeometryError(f"Delta level {m} must lie strictly between 0 and {n}")
    if any(not cfg.assoc[c] for c in cfg.cubes):
        raise GeometryError("every cube needs a nonempty family")
    ladder = (0, m, n)
    stages = []
    mass0 = cfg.mass()

    fams = {c: _uniformize_cube_family(cfg.family(c), ladder) for c in cfg.cubes}
    mass1 = sum(len(f) for f in fams.values())
    stages.append(Stage("family uniformize", None, mass1 / mass0))

    m_of = {c: len({parent(t, m) for t in f}) for c, f in fams.items()}
    m_cls, keep = pigeonhole(m_of, {c: len(f) for c, f in fams.items()}, p)
    fams = {c: f for c, f in fams.items() if c in keep}
    stages.append(Stage("common m", m_cls, _mass(fams) / mass1))

    mass2 = _mass(fams)
    P1 = CubeSet.of(amb, list(fams), level=n)
    kept = set(uniformize(P1, ladder=ladder).P.distinct())
    fams = {c: f for c, f in fams.items() if c in kept}
    stages.append(Stage("cube uniformize", None, _mass(fams) / mass2))

    mass3 = _mass(fams)
    cells: dict[Cube, list[Cube]] = defaultdict(list)
    for c in fams:
        cells[parent(c, m)].append(c)
    cell_X: dict[Cube, int] = {}
    cell_tubes: dict[Cube, set] = {}
    cell_mass: dict[Cube, int] = {}
    identity: dict[Cube, Fraction] = {}
    for bp, members in cells.items():
        mu: dict[Tube, int] = defaultdict(int)
        for c in members:
            for bt in {parent(t, m) for t in fams[c]}:
                mu[bt] += 1
        x_cls, chosen = pigeonhole(mu, mu, p)
        cell_X[bp] = x_cls
        cell_tubes[bp] = chosen
        cell_mass[bp] = sum(
            1 for c in members for t in fams[c] if parent(t, m) in chosen
        )
        identity[bp] = Fraction(p**x_cls * len(chosen), len(members) * p**m_cls)
    X_cls, good_cells = pigeonhole({bp: p ** cell_X[bp] for bp in cells}, cell_mass, p)
    X_cls = cell_X[next(iter(good_cells))]
    fams = {
        c: tuple(t for t in f if parent(t, m) in cell_tubes[parent(c, m)])
        for c, f in fams.items()
        if parent(c, m) in good_cells
    }
    fams = {c: f for c, f in fams.items() if f}
    stages.append(Stage("common X", X_cls, _mass(fams) / mass3 if mass3 else 0.0))

    cfg1 = Configuration(amb, tuple(fams), fams)
    amb_d = Ambient(p, m)
    coarse: dict[Cube, set] = defaultdict(set)
    for c, f in fams.items():
        coarse[parent(c, m)].update(parent(t, m) for t in f)
    cfg_d = Configuration(amb_d, tuple(coarse), {bp: tuple(ts) for bp, ts in coarse.items()})

    cert = nice_certify(cfg, s) if cfg.cubes else None
    baseline = len(cfg.cubes) * (cert.M_max if cert else 0)
    total = cover_sum(cfg, cfg_d)
    report = CoverReport(
        total,
        baseline,
        Fraction(total, baseline) if baseline else Fraction(0),
        {bp: identity[bp] for bp in good_cells},
        p**m_cls,
        p**X_cls,
        tuple(stages),
        default_slack(amb) if slack is None else Fraction(slack),
    )
    return cfg1, cfg_d, report


def _mass(fams: Mapping[Cube, Sequence]) -> int:
    return sum(len(f) for f in fams.values())


def bad_tube_theta(cfg: Configuration, s: Exponent) -> tuple[float, PValue, PValue]:
    """``theta = 8 K1 K2 ln(1/delta)``: ``K1`` the Katz-Tao constant of the cubes, ``K2`` the nice constant."""
    from .setstats import katz_tao_certificate

    K1 = katz_tao_certificate(cfg.P, s).C_min
    K2 = nice_certify(cfg, s).C
    theta = 8 * float(K1) * float(K2) * cfg.ambient.n * math.log(cfg.ambient.p)
    return theta, K1, K2
