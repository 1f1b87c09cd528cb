from fractions import Fraction

import numpy as np
import pytest

from oracles import frostman_constant_log, katz_tao_constant_log
from padic_incidence import Ambient, CubeSet, Exponent, GeometryError, PValue
from padic_incidence.constructions import DigitSet, cantor_1d
from padic_incidence.geometry import all_cubes, cubeset_from_points
from padic_incidence.setstats import (
    box_dim_fit,
    count_class,
    covering_number,
    frostman_certificate,
    katz_tao_certificate,
    parse_certificate,
    uniformity_check,
)


def cantor_product(p, n, digits):
    A = cantor_1d(p, n, DigitSet.of(p, digits))
    return cubeset_from_points(Ambient(p, n), [(x, y) for x in A for y in A])


def test_covering_number_examples():
    P = cubeset_from_points(Ambient(2, 3), [(0, 0), (1, 0), (4, 4)])
    assert covering_number(P, 1) == 2
    assert covering_number(P, 3) == 3
    assert covering_number(P, 0) == 1
    full = CubeSet.of(Ambient(2, 3), all_cubes(Ambient(2, 3)))
    assert [covering_number(full, m) for m in range(4)] == [1, 4, 16, 64]
    with pytest.raises(GeometryError):
        covering_number(P, 4)


def test_frostman_cantor_product_matches_oracle():
    P = cantor_product(3, 3, [0, 1])
    cert = frostman_certificate(P, Exponent.parse(3, "log:4"))
    assert cert.C_min == 1
    pts = [(c.x, c.y) for c in P.distinct()]
    assert frostman_constant_log(pts, 3, 4, 3) == 1


def test_frostman_full_grid_and_singleton():
    amb = Ambient(2, 3)
    full = CubeSet.of(amb, all_cubes(amb))
    assert frostman_certificate(full, Exponent.rational(2, 2)).C_min == 1
    single = CubeSet.of(amb, [amb.cube(3, 5)])
    s = Exponent.rational(2, 1)
    cert = frostman_certificate(single, s)
    assert cert.C_min == 2**3
    assert cert.witness_level == 3


def test_katz_tao_examples():
    amb = Ambient(3, 3)
    assert katz_tao_certificate(CubeSet.of(amb, [amb.cube(1, 1)]), Exponent.rational(3, 1)).C_min == 1
    line = cubeset_from_points(amb, [(x, 0) for x in cantor_1d(3, 3, DigitSet.of(3, [0, 1]))])
    assert katz_tao_certificate(line, Exponent.log(3, 2)).C_min == 1
    full = CubeSet.of(amb, all_cubes(amb))
    assert katz_tao_certificate(full, Exponent.rational(3, 2)).C_min == 1


def test_certificates_random_against_oracle():
    rng = np.random.default_rng(11)
    for _ in range(30):
        p = int(rng.choice([2, 3]))
        n = int(rng.integers(1, 4))
        amb = Ambient(p, n)
        k = int(rng.integers(1, p * p + 1))
        idx = rng.choice(amb.q**2, size=int(rng.integers(1, amb.q**2 + 1)), replace=False)
        pts = [divmod(int(i), amb.q) for i in idx]
        P = cubeset_from_points(amb, pts)
        s = Exponent.log(p, k)
        f = frostman_certificate(P, s)
        kt = katz_tao_certificate(P, s)
        assert f.C_min == frostman_constant_log(pts, p, k, n)
        assert kt.C_min == katz_tao_constant_log(pts, p, k, n)
        # minimality: the bound holds at C_min and fails just below
        assert f.bound_holds(P, f.C_min)
        assert not f.bound_holds(P, f.C_min * Fraction(999999999, 10**9))
        # size lower bound |P| >= C^-1 delta^-s
        assert PValue(p, P.n_distinct) * f.C_min >= s.power(n)


def test_certificate_record_roundtrip():
    cert = frostman_certificate(cantor_product(3, 2, [0, 1]), Exponent.log(3, 4))
    rec = parse_certificate(cert.record())
    assert rec["kind"] == "frostman" and rec["s"] == "log:4" and rec["C_min"] == "1"


def test_count_class():
    assert [count_class(c, 2) for c in (1, 2, 3, 4, 7, 8)] == [1, 2, 2, 3, 3, 4]
    with pytest.raises(ValueError):
        count_class(0, 2)


def test_uniformity_examples():
    amb = Ambient(2, 2)
    full = CubeSet.of(amb, all_cubes(amb))
    ok, prof = uniformity_check(full, 1, 2)
    assert ok and prof.counts == (8, 8)
    # one level-1 cell with 3 children, another with 1
    skew = cubeset_from_points(amb, [(0, 0), (2, 0), (0, 2), (1, 1)])
    ok, prof = uniformity_check(skew, 1, 2)
    assert not ok and prof is None
    with pytest.raises(GeometryError):
        uniformity_check(full, 3, 1)


def test_uniformity_cantor_every_block():
    P = cantor_product(3, 4, [0, 1])
    for T, N in [(1, 4), (2, 2), (4, 1)]:
        ok, prof = uniformity_check(P, T, N)
        assert ok
        assert all(c == 3 ** count_class(4**T, 3) for c in prof.counts)


def test_uniformity_swap_invariant():
    rng = np.random.default_rng(3)
    amb = Ambient(2, 4)
    for _ in range(20):
        pts = [divmod(int(i), 16) for i in rng.choice(256, size=20, replace=False)]
        P = cubeset_from_points(amb, pts)
        Q = cubeset_from_points(amb, [(y, x) for x, y in pts])
        assert uniformity_check(P, 2, 2)[0] == uniformity_check(Q, 2, 2)[0]


def test_box_dim_fit():
    amb = Ambient(2, 3)
    full = box_dim_fit(CubeSet.of(amb, all_cubes(amb)))
    assert full.exact and full.slope == pytest.approx(2.0) and max(map(abs, full.residuals)) == 0
    cantor = box_dim_fit(cantor_product(3, 6, [0, 1]))
    assert cantor.exact
    assert cantor.counts == tuple(4**m for m in range(7))
    assert cantor.slope == pytest.approx(1.26186, abs=1e-5)
    single = box_dim_fit(CubeSet.of(amb, [amb.cube(0, 0)]))
    assert single.slope == 0
    with pytest.raises(GeometryError):
        box_dim_fit(CubeSet.of(amb, [amb.cube(0, 0)]), [1])
