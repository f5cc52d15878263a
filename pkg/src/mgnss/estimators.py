"""scikit-learn style wrappers around the completion solvers.

Completion is transductive, so these behave like sklearn's imputers:
``fit`` completes the given cube and stores it in ``completed_``;
``transform`` runs a fresh completion on its argument. Missing entries are
marked either by NaN in ``X`` or by an explicit boolean ``mask``
(``True`` = observed).
"""

from __future__ import annotations

from dataclasses import fields

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .coarse import CoarseConfig, coarse_complete
from .fctn import FctnConfig, fctn_complete
from .pipeline import PipelineConfig, recover


def check_tensor(X, min_ndim=2, max_ndim=None) -> np.ndarray:
    """Convert to a float64 array and validate its order; NaN is allowed."""
    X = np.array(X, dtype=np.float64)
    if X.ndim < min_ndim or (max_ndim is not None and X.ndim > max_ndim):
        raise ValueError(f"expected a tensor of order {min_ndim}..{max_ndim}, got {X.ndim}")
    if np.any(np.isinf(X)):
        raise ValueError("input contains Inf")
    return X


def resolve_mask(X, mask=None):
    """Return ``(X_filled, mask)``; NaN entries count as unobserved."""
    observed = ~np.isnan(X)
    if mask is None:
        mask = observed
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != X.shape:
            raise ValueError(f"mask shape {mask.shape} does not match X shape {X.shape}")
        if np.any(mask & ~observed):
            raise ValueError("mask marks NaN entries as observed")
    if not mask.any():
        raise ValueError("no observed entries")
    return np.where(mask, X, 0.0), mask


class _CompleterMixin(TransformerMixin):

    def _complete(self, X, mask):
        raise NotImplementedError

    def fit(self, X, y=None, mask=None):
        X, mask = resolve_mask(check_tensor(X, *self._orders), mask)
        self.mask_ = mask
        self.completed_ = self._complete(X, mask)
        return self

    def transform(self, X, mask=None):
        check_is_fitted(self, "completed_")
        X, mask = resolve_mask(check_tensor(X, *self._orders), mask)
        return self._complete(X, mask)

    def fit_transform(self, X, y=None, mask=None):
        return self.fit(X, mask=mask).completed_


class TuckerCompleter(_CompleterMixin, BaseEstimator):
    """Reweighted low-Tucker-rank completion (ADMM)."""

    _orders = (2, None)

    def __init__(self, alpha=(1.0, 1.5, 1.2), mu0=1 / 160, eta=1.1, epsilon=1e-6,
                 max_iters=50, tol=1e-4, reweighted=True):
        self.alpha = alpha
        self.mu0 = mu0
        self.eta = eta
        self.epsilon = epsilon
        self.max_iters = max_iters
        self.tol = tol
        self.reweighted = reweighted

    def _complete(self, X, mask):
        config = CoarseConfig(**self.get_params())
        x, state = coarse_complete(X, mask, config, return_state=True)
        self.n_iter_ = state.iter
        self.history_ = state.history
        return x


class FCTNCompleter(_CompleterMixin, BaseEstimator):
    """Fully-connected tensor network completion (PAM)."""

    _orders = (3, None)

    def __init__(self, ranks=None, rho=0.1, max_iters=30, tol=1e-4, init_seed=0,
                 init_scale=None):
        self.ranks = ranks
        self.rho = rho
        self.max_iters = max_iters
        self.tol = tol
        self.init_seed = init_seed
        self.init_scale = init_scale

    def _complete(self, X, mask):
        x, fs, history = fctn_complete(X, mask, FctnConfig(**self.get_params()),
                                       return_factors=True)
        self.factors_ = fs
        self.n_iter_ = len(history)
        self.history_ = history
        return x


class MGNSSCompleter(_CompleterMixin, BaseEstimator):
    """Full multi-granularity non-local recovery of an order-3 cube.

    Parameters mirror :class:`~mgnss.pipeline.PipelineConfig`; ``report_``
    holds the :class:`~mgnss.pipeline.RecoveryReport` of the last run.
    """

    _orders = (3, 3)

    def __init__(self, w1=5, stride1=2, w2=6, v=5, blocks_per_cluster=50,
                 max_kmeans_iters=100, k_similar=16, search_radius=20.0, iters=3,
                 coarse=None, fctn_init=None, fctn_group=None, seed=0,
                 ablation="full", normalize_input=True, n_jobs=1):
        self.w1 = w1
        self.stride1 = stride1
        self.w2 = w2
        self.v = v
        self.blocks_per_cluster = blocks_per_cluster
        self.max_kmeans_iters = max_kmeans_iters
        self.k_similar = k_similar
        self.search_radius = search_radius
        self.iters = iters
        self.coarse = coarse
        self.fctn_init = fctn_init
        self.fctn_group = fctn_group
        self.seed = seed
        self.ablation = ablation
        self.normalize_input = normalize_input
        self.n_jobs = n_jobs

    def to_config(self) -> PipelineConfig:
        params = {k: v for k, v in self.get_params().items() if v is not None}
        names = {f.name for f in fields(PipelineConfig)}
        return PipelineConfig(**{k: v for k, v in params.items() if k in names})

    def _complete(self, X, mask):
        x, self.report_ = recover(X, mask, self.to_config())
        return x
