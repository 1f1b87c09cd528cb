import itertools

import numpy as np
import pytest

from oracles import n_delta_b_all, triple_J
from padic_incidence import Ambient, CubeSet, GeometryError, Tube, TubeSet
from padic_incidence.constructions import cantor_product_config
from padic_incidence.geometry import all_cubes, all_tubes, cubeset_from_points
from padic_incidence.incidence import (
    bad_tube_filter,
    incidence_count,
    n_delta_b,
    rich_tubes,
    spacing_ok,
    thicken_tubes,
    triple_count_J,
    triple_count_J_pairs,
    triple_count_J_tubes,
    tubelet_decompose,
    tubelet_of,
    tubes_per_cube,
)


def random_multiset(rng, amb, size):
    idx = rng.integers(0, amb.q**2, size=size)
    return CubeSet.of(amb, [amb.cube(*divmod(int(i), amb.q)) for i in idx])


def test_incidence_count_full_grid():
    amb = Ambient(2, 2)
    P = CubeSet.of(amb, all_cubes(amb))
    T = TubeSet.of(amb, all_tubes(amb))
    assert incidence_count(P, T) == 2**6
    assert (tubes_per_cube(P, T) == 4).all()


def test_thicken_preserves_mass():
    amb = Ambient(3, 3)
    T = TubeSet.of(amb, [amb.tube(1, 2), amb.tube(10, 11), amb.tube(4, 0)])
    thick = thicken_tubes(T, 2)
    assert thick.level == 1 and len(thick) == 3
    assert thick.multiplicity(Tube(3, 1, 1, 2)) == 2
    with pytest.raises(GeometryError):
        thicken_tubes(T, 3)


def test_J_both_ways_against_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(12):
        p = int(rng.choice([2, 3]))
        n = int(rng.integers(1, 3))
        amb = Ambient(p, n)
        P = random_multiset(rng, amb, int(rng.integers(1, 10)))
        pts = [(c.x, c.y) for c in P]
        for dl in range(n + 1):
            ref = triple_J(pts, p, n, dl)
            assert triple_count_J_tubes(P, dl) == ref
            assert triple_count_J_pairs(P, dl) == ref
            assert triple_count_J(P, dl) == ref


def test_n_delta_b_against_brute_force():
    rng = np.random.default_rng(4)
    amb = Ambient(2, 3)
    P = random_multiset(rng, amb, 25)
    pts = [(c.x, c.y) for c in P]
    for dl, b in itertools.product(range(4), (1, 2, 3)):
        ref = n_delta_b_all(pts, 2, 3, dl, b)
        for (a, b0), N in list(ref.items())[:20]:
            assert n_delta_b(amb.tube(a, b0), P, dl, b) == N
        st = rich_tubes(P, dl, 1, b)
        assert dict(((t.a, t.b), N) for t, N in st.tubes) == ref
        assert st.sum_squares == sum(N * N for N in ref.values() if N >= 2)
        assert b * b * st.sum_squares <= 2 * st.J


def test_rich_tubes_full_grid():
    amb = Ambient(2, 3)
    P = CubeSet.of(amb, all_cubes(amb))
    st = rich_tubes(P, 1, 2, 2**2)
    assert st.count == 2**6
    assert all(N == 2 for _, N in st.tubes)


def test_rich_tubes_candidates_and_spacing():
    cfg = cantor_product_config(3, 2, [0, 1], [0, 1], [0, 1])
    P = cfg.P
    cand = list(cfg.tubes)[:5]
    st = rich_tubes(P, 1, 1, 1, candidates=cand, eps=0)
    assert {t for t, _ in st.tubes} <= set(cand)
    assert set(st.spacing_ok) == {t for t, _ in st.tubes}
    assert st.frostman_K is not None and st.measured_constant(P) is not None


def test_spacing_ok_eps_monotone():
    amb = Ambient(2, 3)
    P = CubeSet.of(amb, all_cubes(amb))
    t = amb.tube(1, 0)
    # the full grid meets every tube in a rho-fraction of cells
    assert spacing_ok(P, t, 3, 0)
    line = cubeset_from_points(amb, [(x, x) for x in range(8)])
    assert not spacing_ok(line, t, 3, 0)
    assert spacing_ok(line, t, 3, 1)


def _points_in(t, Q, n):
    q = t.p**n
    mw = t.p**Q.level
    return frozenset(
        (x, (t.a * x + t.b) % q)
        for x in range(q)
        if x % mw == Q.x and (t.a * x + t.b) % q % mw == Q.y
    )


@pytest.mark.parametrize("p,n,w", [(2, 3, 1), (2, 3, 2), (3, 2, 1)])
def test_tubelet_keys_match_point_sets(p, n, w):
    amb = Ambient(p, n)
    for Q in all_cubes(amb, w):
        by_key, by_set = {}, {}
        for t in all_tubes(amb):
            pts = _points_in(t, Q, n)
            key = tubelet_of(t, Q)
            assert (key is None) == (not pts)
            if key is not None:
                by_key.setdefault(key, set()).add(t)
                by_set.setdefault(pts, set()).add(t)
        assert sorted(map(sorted, by_key.values())) == sorted(map(sorted, by_set.values()))


def test_tubelet_decompose_counts():
    amb = Ambient(2, 3)
    P = CubeSet.of(amb, all_cubes(amb))
    T = TubeSet.of(amb, all_tubes(amb))
    entries = tubelet_decompose(T, P, 1, 2, 1)
    # multiplicities add up to the number of (tube, Q) meetings
    assert sum(e.m for e in entries) == 64 * 2
    assert all(e.N >= 1 for e in entries)


def test_bad_tube_filter_threshold():
    cfg = cantor_product_config(2, 3, [0, 1], [0, 1], [0, 1])
    out, st = bad_tube_filter(cfg, 3)
    assert st.max_multiplicity < 3
    assert all(k < 3 for k in out.multiplicity().values())
    kept, st2 = bad_tube_filter(cfg, 10**6)
    assert kept == cfg and st2.n_bad == 0 and st2.retained_mass == 1.0
    with pytest.raises(GeometryError):
        bad_tube_filter(cfg, 0.5)
