"""Invariant suites run by ``verify``.

Each check yields a :class:`Check`; a failing check carries the label of the
property it tests.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

from . import fourier as fr
from .constructions import cantor_product_config, make_rng, random_weighted_instance
from .exact import Exponent
from .geometry import (
    Ambient,
    CubeSet,
    all_cubes,
    all_tubes,
    count_common_tubes,
    cube_distance,
    dual_cube,
    duality,
    tube_contains,
    tubes_through,
)
from .incidence import rich_tubes, triple_count_J_pairs, triple_count_J_tubes
from .multiscale import build_scale_delta, nice_certify, uniformize
from .setstats import uniformity_check


@dataclass(frozen=True)
class Check:
    label: str
    ok: bool
    detail: str = ""


@dataclass
class SuiteOptions:
    p: int | None = None
    n: int | None = None
    seed: int = 0
    trials: int | None = None


def suite_fourier(opt: SuiteOptions) -> Iterator[Check]:
    rng = make_rng(opt.seed)
    cases = [(opt.p, opt.n)] if opt.p and opt.n else [(2, 3), (3, 2), (5, 1)]
    for p, n in cases:
        amb = Ambient(p, n)
        for _ in range(opt.trials or 5):
            f = fr.GridFunction(amb, _rand_complex(rng, amb.q))
            g = fr.GridFunction(amb, _rand_complex(rng, amb.q))
            d1, d2 = fr.check_parseval(f, g)
            yield Check("Plancherel/Parseval identity", max(d1, d2) < 1e-9, f"p={p} n={n} dev={max(d1, d2):.2e}")
            d = fr.check_convolution(f, g)
            yield Check("Convolution identity", d < 1e-9, f"p={p} n={n} dev={d:.2e}")
            d = fr.double_transform_deviation(f)
            yield Check("double transform is reflection", d < 1e-10, f"p={p} n={n} dev={d:.2e}")
        for t in all_tubes(amb)[:: max(1, amb.q // 3)]:
            m = fr.offline_spectral_mass(t, amb)
            yield Check("tube spectrum supported on a line", m < 1e-9, f"{t} mass={m:.2e}")


def _rand_complex(rng, q):
    return rng.normal(size=(q, q)) + 1j * rng.normal(size=(q, q))


def suite_highlow(opt: SuiteOptions, rows: list | None = None) -> Iterator[Check]:
    rng = make_rng(opt.seed)
    p, n = opt.p or 3, opt.n or 3
    if n < 2:
        raise ValueError("highlow needs n >= 2")
    amb = Ambient(p, n)
    cap = min(200, amb.q**2)
    for trial in range(opt.trials or 20):
        P, T = random_weighted_instance(
            rng, p, n, int(rng.integers(1, cap + 1)), int(rng.integers(1, cap + 1))
        )
        for k in range(1, n):
            rep = fr.highlow_split(P, T, k)
            if rows is not None:
                rows.append({"trial": trial, **rep.row()})
            scale = max(1.0, float(rep.I_exact))
            yield Check("high-low decomposition", rep.identity_error() <= 1e-6 * scale, f"trial {trial} k={k}")
            yield Check("equality of low", rep.low_error() <= 1e-6 * max(1.0, abs(rep.L)), f"trial {trial} k={k}")
            yield Check("estimate of high", rep.H <= rep.high_bound + 1e-6, f"trial {trial} k={k}")
            yield Check("High-low method", float(rep.lhs) <= rep.rhs + 1e-6, f"trial {trial} k={k}")


def suite_geometry(opt: SuiteOptions) -> Iterator[Check]:
    cases = [(opt.p, opt.n)] if opt.p and opt.n else [(3, 2), (2, 4)]
    for p, n in cases:
        amb = Ambient(p, n)
        cubes = all_cubes(amb)
        tubes = all_tubes(amb)
        images = {duality(c) for c in cubes}
        yield Check("point-line duality bijection", len(images) == len(tubes) and all(
            dual_cube(duality(c)) == c for c in cubes), f"p={p} n={n}")
        members = {t: {c for c in cubes if tube_contains(t, c)} for t in tubes}
        through = {c: set() for c in cubes}
        for t, cs in members.items():
            for c in cs:
                through[c].add(t)
        yield Check("p^n tubes through each cube", all(
            len(ts) == amb.q and ts == set(tubes_through(c, amb).distinct()) for c, ts in through.items()),
            f"p={p} n={n}")
        bad = 0
        for c1, c2 in itertools.combinations(cubes, 2):
            k = cube_distance(c1, c2)
            cnt = count_common_tubes(c1, c2)
            if cnt != len(through[c1] & through[c2]) or cnt not in (0, p**k):
                bad += 1
        yield Check("pass through both of them", bad == 0, f"p={p} n={n} failures={bad}")


def suite_counting(opt: SuiteOptions) -> Iterator[Check]:
    rng = make_rng(opt.seed)
    p, n = opt.p or 2, opt.n or 3
    amb = Ambient(p, n)
    for trial in range(opt.trials or 20):
        size = int(rng.integers(1, min(40, amb.q**2) + 1))
        idx = rng.integers(0, amb.q**2, size=size)
        P = CubeSet.of(amb, [amb.cube(*divmod(int(i), amb.q)) for i in idx])
        for dl in range(n + 1):
            J1, J2 = triple_count_J_tubes(P, dl), triple_count_J_pairs(P, dl)
            yield Check("triple count J both ways", J1 == J2, f"trial {trial} level {dl}: {J1} vs {J2}")
            for b in (1, 2, 3):
                st = rich_tubes(P, dl, 1, b)
                yield Check("rich tube square bound", b * b * st.sum_squares <= 2 * st.J,
                            f"trial {trial} level {dl} b={b}")


def suite_multiscale(opt: SuiteOptions) -> Iterator[Check]:
    rng = make_rng(opt.seed)
    for trial in range(opt.trials or 20):
        p = int(rng.choice([2, 3]))
        T = int(rng.choice([1, 2]))
        N = int(rng.choice([2, 3]))
        amb = Ambient(p, T * N)
        if amb.q**2 > 4096:
            amb = Ambient(p, T * 2)
            N = 2
        size = int(rng.integers(1, min(300, amb.q**2) + 1))
        idx = rng.choice(amb.q**2, size=size, replace=False)
        P = CubeSet.of(amb, [amb.cube(*divmod(int(i), amb.q)) for i in idx])
        res = uniformize(P, T, N)
        ok, _ = uniformity_check(res.P, T, N)
        yield Check("uniform set", ok, f"trial {trial}")
        yield Check("pigeonhole retention", res.ratio >= Fraction(1, (2 * T + 1) ** N), f"trial {trial} ratio={res.ratio}")
    cfg = cantor_product_config(3, 4, [0, 1], [0, 1], [0, 1])
    s = Exponent.log(3, 2)
    cert = nice_certify(cfg, s)
    yield Check("nice configuration", cert.C == 1 and cert.M_min == cert.M_max == 16, f"C={cert.C} M={cert.M_min}")
    _, cfg_d, rep = build_scale_delta(cfg, 2, s)
    cd = nice_certify(cfg_d, s)
    yield Check("new scale Delta", cd.C == 1 and rep.ratio >= Fraction(1, 5**5), f"C={cd.C} cover={rep.ratio}")


SUITES: dict[str, Callable[..., Iterator[Check]]] = {
    "fourier": suite_fourier,
    "highlow": suite_highlow,
    "geometry": suite_geometry,
    "counting": suite_counting,
    "multiscale": suite_multiscale,
}
