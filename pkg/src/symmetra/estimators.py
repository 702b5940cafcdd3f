"""scikit-learn style wrappers.

The rearrangements are stateless transformers on flattened grid functions:
``X`` has shape ``(n_samples, n**d)``, one full-grid function per row in C
order. :class:`MountainPassSolver` follows the estimator protocol for its
parameters and fitted attributes, but has no training data; ``fit``
ignores ``X``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .grid import Domain, GridFunction
from .minimax import SolverConfig, solve
from .model import load_model
from .rearrange import Polarizer, PolarizerMode, polarize_signed, symmetrize


class _GridTransformer(TransformerMixin, BaseEstimator):
    def _domain(self) -> Domain:
        return Domain(self.d, self.n)

    def fit(self, X, y=None):
        dom = self._domain()
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != dom.n**dom.d:
            raise ValueError(f"expected {dom.n**dom.d} features for d={dom.d}, n={dom.n}; got {X.shape[1]}")
        self.n_features_in_ = X.shape[1]
        self.domain_ = dom
        return self

    def _rows(self, X):
        check_is_fitted(self, "domain_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        dom = self.domain_
        for row in X:
            yield GridFunction(dom, row.reshape(dom.shape))

    def transform(self, X):
        return np.stack([self._apply(u).values.ravel() for u in self._rows(X)])


class SchwarzSymmetrizer(_GridTransformer):
    """Row-wise discrete Schwarz symmetrization.

    Parameters
    ----------
    d : int
        Dimension.
    n : int
        Nodes per axis (odd).

    Examples
    --------
    >>> from symmetra.grid import Domain
    >>> u = Domain(2, 9).from_function(lambda x: (1 - (x**2).sum(0)) * (x[0] > 0))
    >>> Xs = SchwarzSymmetrizer(d=2, n=9).fit_transform(u.values.reshape(1, -1))
    >>> Xs.shape
    (1, 81)
    """

    def __init__(self, d: int = 2, n: int = 33):
        self.d = d
        self.n = n

    def _apply(self, u):
        return symmetrize(u)


class PolarizationTransformer(_GridTransformer):
    """Row-wise polarization ``u -> |u|^H`` by a fixed half-space.

    Parameters
    ----------
    alpha : sequence of float
        Unit normal of ``H = {x . alpha <= beta}``.
    beta : float
        Offset, ``>= 0``; ``inf`` is the identity on ``|u|``.
    mode : {"exact", "interp"}
    """

    def __init__(self, d: int = 2, n: int = 33, alpha=(1.0, 0.0), beta: float = 0.0, mode: str = "exact"):
        self.d = d
        self.n = n
        self.alpha = alpha
        self.beta = beta
        self.mode = mode

    def fit(self, X, y=None):
        super().fit(X, y)
        self.polarizer_ = Polarizer(tuple(self.alpha), self.beta)
        if len(self.polarizer_.alpha) != self.d:
            raise ValueError("alpha must have d components")
        self.mode_ = PolarizerMode.parse(self.mode)
        return self

    def _apply(self, u):
        return polarize_signed(u, self.polarizer_, self.mode_)


class MountainPassSolver(BaseEstimator):
    """Symmetric mountain-pass critical point of a model on the unit ball.

    Fitted attributes: ``solution_`` (GridFunction), ``critical_value_``,
    ``slope_``, ``asymmetry_``, ``converged_`` and the full ``report_``.
    """

    def __init__(
        self,
        model="semilinear",
        d: int = 2,
        n: int = 65,
        k: int = 40,
        tol_res: float = 1e-4,
        tol_sym: float = 1e-3,
        max_iter: int = 200,
        sweep_period: int = 10,
        m: int = 16,
        seed: int = 7,
        model_check: str = "error",
    ):
        self.model = model
        self.d = d
        self.n = n
        self.k = k
        self.tol_res = tol_res
        self.tol_sym = tol_sym
        self.max_iter = max_iter
        self.sweep_period = sweep_period
        self.m = m
        self.seed = seed
        self.model_check = model_check

    def fit(self, X=None, y=None):
        model = load_model(self.model) if isinstance(self.model, str) else self.model
        cfg = SolverConfig(
            k=self.k,
            tol_res=self.tol_res,
            tol_sym=self.tol_sym,
            max_iter=self.max_iter,
            sweep_period=self.sweep_period,
            m=self.m,
            seed=self.seed,
            model_check=self.model_check,
        )
        rep = solve(model, Domain(self.d, self.n), cfg)
        self.report_ = rep
        self.solution_ = rep.solution
        self.critical_value_ = rep.critical_value
        self.slope_ = rep.slope
        self.asymmetry_ = rep.asymmetry
        self.converged_ = rep.converged
        return self
