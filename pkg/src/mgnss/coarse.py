"""Low-Tucker-rank completion by ADMM on the mode unfoldings.

Each mode ``k`` carries an auxiliary tensor ``M_k`` and a multiplier
``Lambda_k``. The low-rank penalty on each unfolding is the log surrogate
``sum_i log(sigma_i + eps)``; its proximal step is approximated by weighted
singular value thresholding with weights ``1 / (sigma_prev + eps)``
(reweighted nuclear norm). ``reweighted=False`` falls back to plain SVT.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .degradation import apply_mask, project_observed
from .tensor import fold_mode, relative_change, svt, unfold_mode


@dataclass(frozen=True)
class CoarseConfig:
    alpha: tuple = (1.0, 1.5, 1.2)
    mu0: float = 1.0 / 160.0
    eta: float = 1.1
    epsilon: float = 1e-6
    max_iters: int = 50
    tol: float = 1e-4
    reweighted: bool = True

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if any(a <= 0 for a in self.alpha):
            raise ValueError(f"alpha weights must be positive, got {self.alpha}")
        if self.mu0 <= 0:
            raise ValueError("mu0 must be positive")
        if self.eta <= 1:
            raise ValueError("eta must exceed 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    def weights_for(self, ndim: int) -> tuple:
        if len(self.alpha) != ndim:
            raise ValueError(
                f"{len(self.alpha)} alpha weights given for an order-{ndim} tensor")
        return self.alpha


@dataclass
class CoarseState:
    x: np.ndarray
    m: list
    lam: list
    mu: float
    iter: int = 0
    history: list = field(default_factory=list)
    residual: float = float("inf")

    @classmethod
    def start(cls, x0: np.ndarray, config: CoarseConfig) -> "CoarseState":
        x0 = np.asarray(x0, dtype=np.float64)
        return cls(
            x=x0.copy(),
            m=[x0.copy() for _ in range(x0.ndim)],
            lam=[np.zeros_like(x0) for _ in range(x0.ndim)],
            mu=float(config.mu0),
        )


def _thresholds(unfolded_x, alpha, mu, config):
    if not config.reweighted:
        return alpha / mu
    sigma_prev = np.linalg.svd(unfolded_x, compute_uv=False)
    return alpha / (mu * (sigma_prev + config.epsilon))


def coarse_step(state: CoarseState, t: np.ndarray, mask: np.ndarray,
                config: CoarseConfig) -> CoarseState:
    """One ADMM sweep; returns a new state."""
    x = state.x
    mu = state.mu
    if mu <= 0:
        raise ValueError("mu must be positive")
    alpha = config.weights_for(x.ndim)
    dims = x.shape

    m_new = []
    for k in range(x.ndim):
        xk = unfold_mode(x, k)
        target = xk + unfold_mode(state.lam[k], k) / mu
        try:
            tau = _thresholds(xk, alpha[k], mu, config)
            m_new.append(fold_mode(svt(target, tau), k, dims))
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"SVD failed on mode {k}: {exc}") from exc

    avg = sum(mk - lk / mu for mk, lk in zip(m_new, state.lam)) / x.ndim
    x_new = project_observed(avg, t, mask)
    lam_new = [lk - mu * (mk - x_new) for mk, lk in zip(m_new, state.lam)]
    residual = max(relative_change(mk, x_new) for mk in m_new)
    return CoarseState(
        x=x_new, m=m_new, lam=lam_new, mu=mu * config.eta,
        iter=state.iter + 1, history=state.history + [relative_change(x_new, x)],
        residual=residual,
    )


def _check_problem(t, mask):
    t = np.asarray(t, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if t.shape != mask.shape:
        raise ValueError(f"tensor shape {t.shape} does not match mask shape {mask.shape}")
    if not mask.any():
        raise ValueError("mask has no observed entry")
    if not np.all(np.isfinite(t[mask])):
        raise ValueError("observed entries contain NaN or Inf")
    return t, mask


def coarse_complete(t, mask, config: CoarseConfig | None = None, x0=None,
                    return_state: bool = False):
    """Complete ``t`` on the unobserved entries of ``mask``.

    Iterates :func:`coarse_step` from ``x0`` (default: zero-filled ``t``)
    until both the relative change of the iterate and the primal residual
    ``max_k ||M_k - X|| / ||X||`` drop below ``config.tol``, or
    ``config.max_iters`` sweeps ran. A fully observed tensor is returned
    after one sweep. With ``return_state=True`` the final
    :class:`CoarseState` (iteration count, change history) is returned too.
    """
    config = config or CoarseConfig()
    t, mask = _check_problem(t, mask)
    if t.ndim < 2:
        raise ValueError("coarse completion needs a tensor of order 2 or more")
    if x0 is None:
        x0 = apply_mask(t, mask)
    else:
        x0 = project_observed(x0, t, mask)
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial iterate contains NaN or Inf")
    t = apply_mask(t, mask)

    state = CoarseState.start(x0, config)
    while state.iter < config.max_iters:
        state = coarse_step(state, t, mask, config)
        if state.history[-1] < config.tol and (state.residual < config.tol or mask.all()):
            break
    if return_state:
        return state.x, state
    return state.x

