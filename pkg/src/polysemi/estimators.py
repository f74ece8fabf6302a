"""Estimator-style wrappers around the functional API.

The objects follow scikit-learn conventions: constructor arguments are plain
hyperparameters, ``fit`` learns attributes with a trailing underscore and
returns ``self``, and ``transform`` maps complex query points (a complex
array, or an (n, 2) real array of [re, im] rows) to one real column.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .backward import EmpiricalMeasure, SampleConfig, default_base_point, iterate_pullback
from .capacity import capacity_leja, leja_points
from .poly import ComplexPoly
from .potential import green_partial, log_potential, robin_constant
from .semigroup import GeneratorSet, validate


def check_generators(X) -> GeneratorSet:
    """GeneratorSet from a GeneratorSet, ComplexPoly list or coefficient lists.

    Coefficients may be complex numbers or [re, im] pairs, ascending degree.
    """
    if isinstance(X, GeneratorSet):
        return X
    gens = []
    for g in X:
        if isinstance(g, ComplexPoly):
            gens.append(g)
            continue
        a = np.asarray(g)
        if a.ndim == 2 and a.shape[1] == 2 and not np.iscomplexobj(a):
            a = a[:, 0] + 1j * a[:, 1]
        gens.append(ComplexPoly(a))
    return validate(gens)


def check_points(Z) -> np.ndarray:
    """Flat complex128 array from complex input or an (n, 2) real array."""
    a = np.asarray(Z)
    if np.iscomplexobj(a):
        return a.astype(np.complex128).ravel()
    a = np.asarray(a, dtype=float)
    if a.ndim == 2 and a.shape[1] == 2:
        return a[:, 0] + 1j * a[:, 1]
    if a.ndim <= 1:
        return a.astype(np.complex128).ravel()
    raise ValueError(f"expected complex values or (n, 2) [re, im] rows, got shape {a.shape}")


class PullbackMeasure(TransformerMixin, BaseEstimator):
    """Approximate the semigroup's equilibrium measure by backward iteration.

    ``transform`` returns the logarithmic potential of the fitted measure.
    """

    def __init__(self, depth=12, mode="stochastic", sample_count=10000, seed=0, base_point=None,
                 exact_tail=0, threads=1):
        self.depth = depth
        self.mode = mode
        self.sample_count = sample_count
        self.seed = seed
        self.base_point = base_point
        self.exact_tail = exact_tail
        self.threads = threads

    def fit(self, X, y=None):
        G = check_generators(X)
        a = default_base_point(G, self.seed) if self.base_point is None else complex(self.base_point)
        cfg = SampleConfig(a, self.depth, self.mode, self.sample_count, self.seed,
                           threads=self.threads, exact_tail=self.exact_tail)
        self.generators_ = G
        self.base_point_ = a
        self.measure_ = iterate_pullback(G, cfg)
        return self

    def transform(self, Z):
        check_is_fitted(self, "measure_")
        return log_potential(self.measure_, check_points(Z)).reshape(-1, 1)


class GreenFunction(TransformerMixin, BaseEstimator):
    """Depth-n dynamical Green's function; ``robin_F_`` is the limiting constant."""

    def __init__(self, depth=10, seed=0, base_point=None, threads=1):
        self.depth = depth
        self.seed = seed
        self.base_point = base_point
        self.threads = threads

    def fit(self, X, y=None):
        G = check_generators(X)
        self.generators_ = G
        self.base_point_ = default_base_point(G, self.seed) if self.base_point is None else complex(self.base_point)
        self.robin_F_ = robin_constant(G)
        return self

    def transform(self, Z):
        check_is_fitted(self, "generators_")
        z = check_points(Z)
        return np.asarray(green_partial(self.generators_, self.base_point_, z, self.depth,
                                        threads=self.threads)).reshape(-1, 1)


class LejaCapacity(BaseEstimator):
    """Capacity of a point cloud from m greedy Leja points."""

    def __init__(self, m=256):
        self.m = m

    def fit(self, X, y=None):
        pts = check_points(X)
        self.leja_points_ = leja_points(pts, self.m)
        self.capacity_ = capacity_leja(pts, self.m)
        self.measure_ = EmpiricalMeasure.uniform(self.leja_points_)
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "capacity_")
        return self.capacity_
