"""Brute-force reference computations, written against raw residues only."""
from __future__ import annotations

import cmath
import itertools
from collections import Counter
from fractions import Fraction


def on_line(a, b, x, y, mod):
    return (y - a * x - b) % mod == 0


def common_tubes(p, m, c1, c2):
    mod = p**m
    return sum(
        1
        for a in range(mod)
        for b in range(mod)
        if on_line(a, b, *c1, mod) and on_line(a, b, *c2, mod)
    )


def incidences(points, weights, tubes, mod):
    """``sum_{(pt, T)} w(pt)`` over points lying on tubes; tubes given at their own modulus."""
    total = Fraction(0)
    for (x, y), w in zip(points, weights):
        for a, b, tmod in tubes:
            if on_line(a, b, x, y, tmod):
                total += w
    return total


def dft2(values, q):
    """Double-sum transform with ``q^-1`` normalization, on a dict ``(x, y) -> value``."""
    out = {}
    for xi1 in range(q):
        for xi2 in range(q):
            acc = 0j
            for (x, y), v in values.items():
                acc += v * cmath.exp(-2j * cmath.pi * ((xi1 * x + xi2 * y) % q) / q)
            out[(xi1, xi2)] = acc / q
    return out


def frostman_constant_log(points, p, k, n):
    """Least ``C`` with ``|P cap Q| <= C k^(-m) |P|`` at every level, where ``p^s = k``."""
    total = len(points)
    best = Fraction(0)
    for m in range(n + 1):
        mod = p**m
        cnt = Counter((x % mod, y % mod) for x, y in points)
        best = max(best, Fraction(max(cnt.values()) * k**m, total))
    return best


def katz_tao_constant_log(points, p, k, n):
    best = Fraction(0)
    for m in range(n + 1):
        mod = p**m
        cnt = Counter((x % mod, y % mod) for x, y in points)
        best = max(best, Fraction(max(cnt.values()), k ** (n - m)))
    return best


def triple_J(points, p, n, dl):
    """Ordered ``(pt1, pt2, T)`` with distinct cells, both points on level-n tube ``T``.

    ``points`` is a list with repeats allowed (each repeat is a separate point).
    """
    q = p**n
    cm = p**dl
    total = 0
    for a in range(q):
        for b in range(q):
            on = [(x, y) for x, y in points if on_line(a, b, x, y, q)]
            for u, v in itertools.product(on, on):
                if (u[0] % cm, u[1] % cm) != (v[0] % cm, v[1] % cm):
                    total += 1
    return total


def n_delta_b_all(points, p, n, dl, b):
    """``{(a, b0): N}`` over all level-n tubes with N >= 1."""
    q = p**n
    cm = p**dl
    out = {}
    for a in range(q):
        for b0 in range(q):
            cells = Counter(
                (x % cm, y % cm) for x, y in points if on_line(a, b0, x, y, q)
            )
            N = sum(1 for v in cells.values() if v >= b)
            if N:
                out[(a, b0)] = N
    return out


def best_uniform_subset(points, p, ladder):
    """Size of the largest uniform subset along ``ladder``.

    For every choice of one class per step, a bottom-up pass keeps in each
    cell the most valuable children, as many as the class allows; the best
    choice wins.
    """
    def cls(c):
        i, bound = 0, 1
        while bound <= c:
            bound *= p
            i += 1
        return i

    steps = list(zip(ladder, ladder[1:]))
    max_cls = [cls(p ** (2 * (f - c))) for c, f in steps]
    finest = p ** ladder[-1]
    leaves = {(x % finest, y % finest) for x, y in points}
    best = 0
    for choice in itertools.product(*[range(1, mc + 1) for mc in max_cls]):
        value = {pt: 1 for pt in leaves}
        for (coarse, _), want in zip(reversed(steps), reversed(choice)):
            cm = p**coarse
            groups = {}
            for (x, y), v in value.items():
                if v > 0:
                    groups.setdefault((x % cm, y % cm), []).append(v)
            lo, hi = p ** (want - 1), p**want - 1
            value = {}
            for cell, vals in groups.items():
                if len(vals) >= lo:
                    value[cell] = sum(sorted(vals, reverse=True)[:hi])
        best = max(best, sum(value.values()))
    return best
