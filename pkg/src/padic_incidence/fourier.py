"""Discrete Fourier analysis on (Z/p^nZ)^2 and the high/low incidence split.

Normalization: ``f_hat(xi) = p^-n * sum_x f(x) exp(-2 pi i <xi, x> / p^n)``.
This is unitary on the ``p^2n``-point grid, so applying it twice gives the
reflection ``x -> f(-x)`` rather than ``f``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .geometry import Ambient, CubeSet, GeometryError, Tube, TubeSet
from .incidence import incidence_count, thicken_tubes

DENSE_GRID_CAP = 400_000


@dataclass(frozen=True)
class GridFunction:
    """A complex function on (Z/p^nZ)^2 stored as ``values[x, y]``."""

    ambient: Ambient
    values: np.ndarray

    def __post_init__(self):
        q = self.ambient.q
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (q, q):
            raise GeometryError(f"grid function must have shape {(q, q)}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise GeometryError("grid function has non-finite values")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, amb: Ambient) -> "GridFunction":
        _check_dense(amb)
        return cls(amb, np.zeros((amb.q, amb.q), dtype=np.complex128))

    def reflect(self) -> "GridFunction":
        """``x -> f(-x)``."""
        idx = (-np.arange(self.ambient.q)) % self.ambient.q
        return GridFunction(self.ambient, self.values[np.ix_(idx, idx)])


def _check_dense(amb: Ambient) -> None:
    if amb.q**2 > DENSE_GRID_CAP:
        raise GeometryError(f"dense grid p^2n={amb.q ** 2} exceeds {DENSE_GRID_CAP}")


@lru_cache(maxsize=32)
def _dft_matrix(q: int) -> np.ndarray:
    # twiddle table of q-th roots of unity, indexed by xi*x mod q
    roots = np.exp(-2j * np.pi * np.arange(q) / q)
    k = np.arange(q)
    return roots[np.outer(k, k) % q]


def dft_forward(f: GridFunction) -> GridFunction:
    """Separable transform: one length-``p^n`` pass per axis."""
    q = f.ambient.q
    F = _dft_matrix(q)
    return GridFunction(f.ambient, (F @ f.values @ F.T) / q)


def dft_direct(f: GridFunction) -> GridFunction:
    """Double-sum evaluation of the transform (``O(p^4n)``); an independent oracle."""
    q = f.ambient.q
    x = np.arange(q)
    out = np.empty((q, q), dtype=np.complex128)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    for xi1 in range(q):
        for xi2 in range(q):
            phase = (xi1 * X1 + xi2 * X2) % q
            out[xi1, xi2] = np.sum(f.values * np.exp(-2j * np.pi * phase / q))
    return GridFunction(f.ambient, out / q)


def _check_pair(f: GridFunction, g: GridFunction) -> None:
    if f.ambient != g.ambient:
        raise GeometryError(f"ambient mismatch {f.ambient} vs {g.ambient}")


def check_parseval(f: GridFunction, g: GridFunction) -> tuple[float, float]:
    """Deviations ``|<f,g> - <f_hat,g_hat>|`` and ``|sum |f|^2 - sum |f_hat|^2|``."""
    _check_pair(f, g)
    fh, gh = dft_forward(f).values, dft_forward(g).values
    inner = np.vdot(g.values, f.values)
    inner_hat = np.vdot(gh, fh)
    norm = np.vdot(f.values, f.values).real
    norm_hat = np.vdot(fh, fh).real
    return float(abs(inner - inner_hat)), float(abs(norm - norm_hat))


def convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """``(f*g)(x) = sum_y f(y) g(x - y)``, computed directly."""
    _check_pair(f, g)
    out = np.zeros_like(f.values)
    for (y1, y2), fy in np.ndenumerate(f.values):
        if fy != 0:
            out += fy * np.roll(g.values, (y1, y2), axis=(0, 1))
    return GridFunction(f.ambient, out)


def check_convolution(f: GridFunction, g: GridFunction) -> float:
    """Max pointwise deviation of ``(f*g)^`` from ``p^n f_hat g_hat``."""
    lhs = dft_forward(convolve(f, g)).values
    rhs = f.ambient.q * dft_forward(f).values * dft_forward(g).values
    return float(np.max(np.abs(lhs - rhs)))


def double_transform_deviation(f: GridFunction) -> float:
    """Max deviation of the twice-transformed function from ``x -> f(-x)``."""
    twice = dft_forward(dft_forward(f)).values
    return float(np.max(np.abs(twice - f.reflect().values)))


def tube_indicator(t: Tube, amb: Ambient) -> GridFunction:
    if t.level != amb.n or t.p != amb.p:
        raise GeometryError(f"{t} is not a level-{amb.n} tube of this ambient")
    g = GridFunction.zeros(amb)
    x = np.arange(amb.q)
    g.values[x, (t.a * x + t.b) % amb.q] = 1
    return g


def offline_spectral_mass(t: Tube, amb: Ambient) -> float:
    """Spectral mass of ``1_t`` off the line ``xi1 + a*xi2 = 0`` through the origin."""
    spec = dft_forward(tube_indicator(t, amb)).values
    q = amb.q
    xi = np.arange(q)
    on = (xi[:, None] + t.a * xi[None, :]) % q == 0
    return float(np.sum(np.abs(spec[~on]) ** 2))


def cube_function(P: CubeSet) -> GridFunction:
    """``f = sum_p w(p) 1_p`` with multiplicity folded into the weight."""
    if P.level != P.ambient.n:
        raise GeometryError("cube function needs level-n cubes")
    f = GridFunction.zeros(P.ambient)
    for c, mult in P.items:
        f.values[c.x, c.y] += float(P.weight(c) * mult)
    return f


def tube_function(T: TubeSet) -> GridFunction:
    """``g = sum_T 1_T`` with multiplicity."""
    if T.level != T.ambient.n:
        raise GeometryError("tube function needs level-n tubes")
    g = GridFunction.zeros(T.ambient)
    x = np.arange(T.ambient.q)
    for t, mult in T.items:
        g.values[x, (t.a * x + t.b) % T.ambient.q] += mult
    return g


def low_frequency_mask(amb: Ambient, k: int) -> np.ndarray:
    """Frequencies with both coordinates divisible by ``p^k``."""
    xi = np.arange(amb.q) % amb.p**k == 0
    return np.outer(xi, xi)


@dataclass(frozen=True)
class HighLowReport:
    k: int
    I_exact: Fraction
    L: float
    H: float
    low_term_exact: Fraction
    high_bound: float
    imag_residual: float

    @property
    def lhs(self) -> Fraction:
        return self.I_exact

    @property
    def rhs(self) -> float:
        return self.high_bound + float(self.low_term_exact)

    def identity_error(self) -> float:
        return abs(float(self.I_exact) - (self.L + self.H))

    def low_error(self) -> float:
        return abs(self.L - float(self.low_term_exact))

    def row(self) -> dict:
        return {
            "k": self.k,
            "I": float(self.I_exact),
            "L": self.L,
            "H": self.H,
            "low_exact": float(self.low_term_exact),
            "high_bound": self.high_bound,
            "lhs": float(self.lhs),
            "rhs": self.rhs,
        }


CSV_COLUMNS = ("k", "I", "L", "H", "low_exact", "high_bound", "lhs", "rhs")


def highlow_split(P: CubeSet, T: TubeSet, k: int) -> HighLowReport:
    """Split the weighted incidence count into low- and high-frequency parts at cutoff ``p^k``.

    ``L`` and ``H`` come from the spectra of the cube and tube functions; the
    exact side counts incidences with the tubes thickened by ``p^k``.  The
    high-frequency bound uses ``sum mult(T)^2`` for the tube count, which is
    ``|T|`` for distinct tubes.
    """
    if P.ambient != T.ambient:
        raise GeometryError(f"ambient mismatch {P.ambient} vs {T.ambient}")
    amb = P.ambient
    if not 1 <= k <= amb.n - 1:
        raise GeometryError(f"cutoff k={k} outside [1, {amb.n - 1}]")
    fh = dft_forward(cube_function(P)).values
    gh = dft_forward(tube_function(T)).values
    pairing = fh * np.conj(gh)
    low = low_frequency_mask(amb, k)
    L_c = pairing[low].sum()
    total = pairing.sum()
    H_c = total - L_c
    I_exact = incidence_count(P, T)
    low_exact = Fraction(1, amb.p**k) * incidence_count(P, thicken_tubes(T, k))
    w2 = sum((P.weight(c) * mult) ** 2 for c, mult in P.items)
    t_eff = sum(mult**2 for _, mult in T.items)
    high_bound = math.sqrt(amb.p ** (amb.n + k - 1) * t_eff * float(w2))
    return HighLowReport(
        k,
        I_exact,
        float(L_c.real),
        float(H_c.real),
        low_exact,
        high_bound,
        float(max(abs(L_c.imag), abs(H_c.imag))),
    )
