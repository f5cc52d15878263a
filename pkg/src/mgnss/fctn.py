"""Fully-connected tensor network (FCTN) factors and PAM-based completion.

Factor ``G_k`` of an order-``N`` network is itself order ``N``: its mode
``k`` is the physical mode of length ``I_k`` and its mode ``j != k`` is the
bond shared with factor ``j``, of length ``R[j, k]``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .degradation import apply_mask, project_observed
from .tensor import contract_pair, fold_mode, generalized_unfold, relative_change, unfold_mode


class FctnRankTable:
    """Symmetric table of bond ranks ``R[i, j]`` for ``i != j``.

    Parameters
    ----------
    ranks : array_like
        ``(n, n)`` integer array; only the off-diagonal part is used and it
        must be symmetric and positive.
    """

    def __init__(self, ranks):
        r = np.array(ranks, dtype=np.int64)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError(f"rank table must be square, got shape {r.shape}")
        np.fill_diagonal(r, 1)
        if not np.array_equal(r, r.T):
            raise ValueError("rank table must be symmetric")
        if np.any(r < 1):
            raise ValueError("ranks must be at least 1")
        self._r = r

    @classmethod
    def uniform(cls, n: int, rank: int) -> "FctnRankTable":
        return cls(np.full((n, n), int(rank)))

    @classmethod
    def from_upper(cls, n: int, values: Sequence[int]) -> "FctnRankTable":
        """Build from the upper triangle listed row by row: R01, R02, ..., R12, ..."""
        values = [int(v) for v in values]
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        if len(values) != len(pairs):
            raise ValueError(f"order {n} needs {len(pairs)} ranks, got {len(values)}")
        r = np.ones((n, n), dtype=np.int64)
        for (i, j), v in zip(pairs, values):
            r[i, j] = r[j, i] = v
        return cls(r)

    @property
    def n(self) -> int:
        return self._r.shape[0]

    def __getitem__(self, ij) -> int:
        i, j = ij
        if i == j:
            raise IndexError("no bond between a factor and itself")
        return int(self._r[i, j])

    def upper(self) -> list:
        return [int(self._r[i, j]) for i in range(self.n) for j in range(i + 1, self.n)]

    def factor_shape(self, k: int, dims: Sequence[int]) -> tuple:
        return tuple(int(dims[k]) if j == k else self[j, k] for j in range(self.n))

    def __eq__(self, other):
        return isinstance(other, FctnRankTable) and np.array_equal(self._r, other._r)

    def __repr__(self):
        return f"FctnRankTable.from_upper({self.n}, {self.upper()})"


def default_ranks(ndim: int) -> FctnRankTable:
    """Uniform rank 3, except bonds touching the 4th (similarity) mode get 2."""
    r = np.full((ndim, ndim), 3, dtype=np.int64)
    if ndim == 4:
        r[3, :] = r[:, 3] = 2
    return FctnRankTable(r)


@dataclass(frozen=True)
class FctnConfig:
    ranks: FctnRankTable | int | None = None
    rho: float = 0.1
    max_iters: int = 30
    tol: float = 1e-4
    init_seed: int = 0
    init_scale: float | None = None

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    def rank_table(self, ndim: int) -> FctnRankTable:
        if self.ranks is None:
            return default_ranks(ndim)
        if isinstance(self.ranks, FctnRankTable):
            if self.ranks.n != ndim:
                raise ValueError(
                    f"rank table of order {self.ranks.n} used for an order-{ndim} tensor")
            return self.ranks
        return FctnRankTable.uniform(ndim, int(self.ranks))


@dataclass
class FctnFactorSet:
    factors: list
    ranks: FctnRankTable
    dims: tuple

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.factors) != len(self.dims) or self.ranks.n != len(self.dims):
            raise ValueError("number of factors, rank-table order and dims disagree")
        for k, g in enumerate(self.factors):
            expected = self.ranks.factor_shape(k, self.dims)
            if np.shape(g) != expected:
                raise ValueError(f"factor {k} has shape {np.shape(g)}, expected {expected}")

    @property
    def order(self) -> int:
        return len(self.dims)

    def copy(self) -> "FctnFactorSet":
        return FctnFactorSet([g.copy() for g in self.factors], self.ranks, self.dims)


def fctn_init(dims, config: FctnConfig) -> FctnFactorSet:
    """Seeded zero-mean Gaussian factors.

    Each factor is scaled by ``config.init_scale`` or, when that is ``None``,
    by ``1/sqrt(prod of its bond ranks)``.
    """
    dims = tuple(int(d) for d in dims)
    ranks = config.rank_table(len(dims))
    rng = np.random.Generator(np.random.PCG64(config.init_seed))
    factors = []
    for k in range(len(dims)):
        shape = ranks.factor_shape(k, dims)
        if config.init_scale is None:
            scale = 1.0 / np.sqrt(np.prod(shape) / dims[k])
        else:
            scale = float(config.init_scale)
        factors.append(scale * rng.standard_normal(shape))
    return FctnFactorSet(factors, ranks, dims)


def _contract_labelled(items):
    """Contract ``[(array, labels), ...]`` left to right over shared labels."""
    acc, acc_labels = items[0]
    acc_labels = list(acc_labels)
    for g, labels in items[1:]:
        shared = [lab for lab in labels if lab in acc_labels]
        axes = [(acc_labels.index(lab), labels.index(lab)) for lab in shared]
        acc = contract_pair(acc, g, axes)
        acc_labels = ([lab for lab in acc_labels if lab not in shared]
                      + [lab for lab in labels if lab not in shared])
    return acc, acc_labels


def _labels(k, n):
    # physical mode of factor k is ("i", k); its bond with j is ("r", min, max)
    return [("i", k) if j == k else ("r", min(j, k), max(j, k)) for j in range(n)]


def fctn_contract(fs: FctnFactorSet) -> np.ndarray:
    """Full network contraction, factor by factor in increasing index."""
    n = fs.order
    acc, labels = _contract_labelled([(g, _labels(k, n)) for k, g in enumerate(fs.factors)])
    return np.transpose(acc, [labels.index(("i", k)) for k in range(n)])


def compose_leave_one_out(fs: FctnFactorSet, i: int) -> np.ndarray:
    """Contract every factor except ``G_i``.

    The result has order ``2(N-1)``. For each remaining factor ``j`` in
    increasing order it carries two modes: (physical ``I_j``, bond ``R[j,i]``)
    if ``j < i`` and (bond ``R[i,j]``, physical ``I_j``) if ``j > i``.
    """
    n = fs.order
    if not 0 <= i < n:
        raise IndexError(f"factor index {i} out of range for order {n}")
    others = [(fs.factors[k], _labels(k, n)) for k in range(n) if k != i]
    acc, labels = _contract_labelled(others)
    order = []
    for j in range(n):
        if j == i:
            continue
        bond = ("r", min(i, j), max(i, j))
        pair = [("i", j), bond] if j < i else [bond, ("i", j)]
        order.extend(labels.index(lab) for lab in pair)
    return np.transpose(acc, order)


def leave_one_out_modes(n: int, i: int) -> tuple:
    """Bond-mode and physical-mode positions of ``compose_leave_one_out(., i)``."""
    bond_modes, phys_modes = [], []
    for pos, j in enumerate(j for j in range(n) if j != i):
        if j < i:
            phys_modes.append(2 * pos)
            bond_modes.append(2 * pos + 1)
        else:
            bond_modes.append(2 * pos)
            phys_modes.append(2 * pos + 1)
    return bond_modes, phys_modes


def fctn_objective(x, fs: FctnFactorSet) -> float:
    return 0.5 * float(np.sum((x - fctn_contract(fs)) ** 2))


def pam_step(x, fs: FctnFactorSet, t, mask, config: FctnConfig):
    """One proximal alternating minimization sweep.

    Each factor solves the ridge problem
    ``min ||X_(i) - G_(i) B||^2 + rho ||G - G_prev||^2`` with ``B`` the bond-by-
    physical unfolding of the leave-one-out network; ``X`` is then averaged
    with the new network and re-projected onto the observations.
    """
    x = np.asarray(x, dtype=np.float64)
    rho = float(config.rho)
    n = fs.order
    fs = fs.copy()
    for i in range(n):
        bond_modes, phys_modes = leave_one_out_modes(n, i)
        b = generalized_unfold(compose_leave_one_out(fs, i), bond_modes, phys_modes)
        g_prev = unfold_mode(fs.factors[i], i)
        rhs = unfold_mode(x, i) @ b.T + rho * g_prev
        gram = b @ b.T
        gram[np.diag_indices_from(gram)] += rho
        try:
            factor = cho_factor(gram)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"normal matrix of factor {i} is not positive definite") from exc
        g_new = cho_solve(factor, rhs.T).T
        fs.factors[i] = fold_mode(g_new, i, fs.factors[i].shape)
    x_new = project_observed((fctn_contract(fs) + rho * x) / (1.0 + rho), t, mask)
    return x_new, fs


def fctn_complete(t, mask, config: FctnConfig | None = None, x0=None,
                  return_factors: bool = False):
    """Complete ``t`` with an FCTN model fitted by PAM.

    Starts from ``x0`` (default: zero-filled ``t``) and seeded random
    factors; stops when the relative change of ``X`` drops below
    ``config.tol`` or after ``config.max_iters`` sweeps. The returned
    tensor equals ``t`` on every observed entry.
    """
    config = config or FctnConfig()
    t = np.asarray(t, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if t.shape != mask.shape:
        raise ValueError(f"tensor shape {t.shape} does not match mask shape {mask.shape}")
    if t.ndim < 3:
        raise ValueError("FCTN completion needs a tensor of order 3 or more")
    if not mask.any():
        raise ValueError("mask has no observed entry")
    if not np.all(np.isfinite(t[mask])):
        raise ValueError("observed entries contain NaN or Inf")
    t = apply_mask(t, mask)
    x = t.copy() if x0 is None else project_observed(x0, t, mask)

    fs = fctn_init(t.shape, config)
    history = []
    for _ in range(config.max_iters):
        x_new, fs = pam_step(x, fs, t, mask, config)
        history.append(relative_change(x_new, x))
        x = x_new
        if history[-1] < config.tol:
            break
    if return_factors:
        return x, fs, history
    return x


def with_seed(config: FctnConfig, seed: int) -> FctnConfig:
    return replace(config, init_seed=int(seed))
