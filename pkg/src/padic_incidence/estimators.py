"""Thin scikit-learn wrappers over point arrays of residues ``(x, y)``."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .geometry import Ambient, CubeSet, GeometryError
from .multiscale import uniformize
from .setstats import box_dim_fit


def _to_cubes(X, p: int, n: int) -> tuple[np.ndarray, CubeSet]:
    X = check_array(X, dtype=np.int64)
    if X.shape[1] != 2:
        raise GeometryError(f"expected (x, y) columns, got {X.shape[1]}")
    amb = Ambient(p, n)
    return X, CubeSet.of(amb, [amb.cube(int(x), int(y)) for x, y in X])


class BoxCountingDimension(BaseEstimator):
    """Box-counting slope of a point set at ``p``-adic scales ``p^-m``."""

    def __init__(self, p: int = 2, n: int = 4, levels=None):
        self.p = p
        self.n = n
        self.levels = levels

    def fit(self, X, y=None):
        _, P = _to_cubes(X, self.p, self.n)
        fit = box_dim_fit(P, self.levels)
        self.dimension_ = fit.slope
        self.intercept_ = fit.intercept
        self.counts_ = np.array(fit.counts)
        self.residuals_ = np.array(fit.residuals)
        self.exact_ = fit.exact
        self.n_features_in_ = 2
        return self


class Uniformizer(TransformerMixin, BaseEstimator):
    """Keep the rows of ``X`` lying in the greedy uniform subset of the fitted set.

    ``ladder`` overrides ``block``/``n_levels``.
    """

    def __init__(self, p: int = 2, n: int = 4, block: int = 1, n_levels: int | None = None, ladder=None):
        self.p = p
        self.n = n
        self.block = block
        self.n_levels = n_levels
        self.ladder = ladder

    def fit(self, X, y=None):
        _, P = _to_cubes(X, self.p, self.n)
        if self.ladder is not None:
            res = uniformize(P, ladder=self.ladder)
        else:
            levels = self.n_levels if self.n_levels is not None else self.n // self.block
            res = uniformize(P, self.block, levels)
        q = self.p**self.n
        self.kept_ = frozenset((c.x, c.y) for c in res.P.distinct())
        self.profile_ = res.profile
        self.retained_ratio_ = res.ratio
        self.modulus_ = q
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "kept_")
        X = check_array(X, dtype=np.int64)
        q = self.modulus_
        mask = np.array([((x % q), (y % q)) in self.kept_ for x, y in X], dtype=bool)
        return X[mask]
