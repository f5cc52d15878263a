"""Dense tensor algebra: unfoldings, SVD-based shrinkage and pairwise contraction.

Tensors are plain ``float64`` numpy arrays. Whenever a tensor is linearized
(unfolding, file payloads) the first index varies fastest, i.e. Fortran
order, and mode unfoldings follow the Kolda-Bader convention. Modes are
0-based like numpy axes.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

#: Floor for the denominator of :func:`relative_change`.
TINY = 1e-30


class SvdResult(NamedTuple):
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray


def _check_mode(ndim: int, k: int) -> int:
    if not isinstance(k, (int, np.integer)) or not 0 <= k < ndim:
        raise ValueError(f"mode {k!r} out of range for an order-{ndim} tensor")
    return int(k)


def unfold_mode(t: np.ndarray, k: int) -> np.ndarray:
    """Mode-``k`` unfolding.

    Row ``i_k`` holds the fibre along mode ``k``; the remaining modes index the
    columns in increasing mode order with the earliest mode varying fastest.
    """
    t = np.asarray(t)
    k = _check_mode(t.ndim, k)
    return np.reshape(np.moveaxis(t, k, 0), (t.shape[k], -1), order="F")


def fold_mode(m: np.ndarray, k: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold_mode`."""
    m = np.asarray(m)
    dims = tuple(int(d) for d in dims)
    k = _check_mode(len(dims), k)
    rest = dims[:k] + dims[k + 1:]
    if m.ndim != 2 or m.shape != (dims[k], int(np.prod(rest, dtype=np.int64))):
        raise ValueError(f"matrix of shape {m.shape} cannot fold to {dims} along mode {k}")
    return np.moveaxis(np.reshape(m, (dims[k],) + rest, order="F"), 0, k)


def _check_bipartition(ndim, row_modes, col_modes):
    row_modes = [int(r) for r in row_modes]
    col_modes = [int(c) for c in col_modes]
    if sorted(row_modes + col_modes) != list(range(ndim)):
        raise ValueError(
            f"row modes {row_modes} and column modes {col_modes} "
            f"are not a partition of 0..{ndim - 1}")
    return row_modes, col_modes


def generalized_unfold(t: np.ndarray, row_modes, col_modes) -> np.ndarray:
    """Matricize ``t`` with ``row_modes`` indexing rows and ``col_modes`` columns.

    Within each group the first listed mode varies fastest.
    """
    t = np.asarray(t)
    row_modes, col_modes = _check_bipartition(t.ndim, row_modes, col_modes)
    n_rows = int(np.prod([t.shape[r] for r in row_modes], dtype=np.int64))
    p = np.transpose(t, row_modes + col_modes)
    return np.reshape(p, (n_rows, -1), order="F")


def generalized_fold(m: np.ndarray, row_modes, col_modes, dims) -> np.ndarray:
    """Inverse of :func:`generalized_unfold`."""
    m = np.asarray(m)
    dims = tuple(int(d) for d in dims)
    row_modes, col_modes = _check_bipartition(len(dims), row_modes, col_modes)
    perm = row_modes + col_modes
    n_rows = int(np.prod([dims[r] for r in row_modes], dtype=np.int64))
    n_cols = int(np.prod([dims[c] for c in col_modes], dtype=np.int64))
    if m.shape != (n_rows, n_cols):
        raise ValueError(f"matrix of shape {m.shape} does not match ({n_rows}, {n_cols})")
    p = np.reshape(m, [dims[i] for i in perm], order="F")
    return np.transpose(p, np.argsort(perm))


def svd(m: np.ndarray) -> SvdResult:
    """Thin SVD with singular values in non-increasing order."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("svd input contains NaN or Inf")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"SVD did not converge on a {m.shape} matrix") from exc
    return SvdResult(u, s, vt)


def svt(m: np.ndarray, thresholds) -> np.ndarray:
    """Singular value thresholding ``U diag(max(s - tau, 0)) V^T``.

    ``thresholds`` is a scalar or one value per singular value; the per-value
    form is the weighted shrinkage used for reweighted (log-surrogate)
    low-rank penalties.
    """
    u, s, vt = svd(m)
    tau = np.asarray(thresholds, dtype=np.float64)
    if tau.ndim > 1 or (tau.ndim == 1 and tau.size not in (1, s.size)):
        raise ValueError(f"expected 1 or {s.size} thresholds, got {tau.size}")
    if np.any(np.isnan(tau)) or np.any(tau < 0):
        raise ValueError("thresholds must be non-negative")
    shrunk = np.maximum(s - tau, 0.0)
    keep = shrunk > 0
    return (u[:, keep] * shrunk[keep]) @ vt[keep]


def contract_pair(a: np.ndarray, b: np.ndarray, axes) -> np.ndarray:
    """Sum over paired modes ``[(mode_in_a, mode_in_b), ...]``.

    Output modes are the free modes of ``a`` followed by those of ``b``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    axes_a = [int(i) for i, _ in axes]
    axes_b = [int(j) for _, j in axes]
    for i, j in zip(axes_a, axes_b):
        _check_mode(a.ndim, i)
        _check_mode(b.ndim, j)
        if a.shape[i] != b.shape[j]:
            raise ValueError(
                f"cannot contract mode {i} of length {a.shape[i]} "
                f"with mode {j} of length {b.shape[j]}")
    return np.tensordot(a, b, axes=(axes_a, axes_b))


def frobenius_norm(t: np.ndarray) -> float:
    return float(np.linalg.norm(np.ravel(t)))


def relative_change(a: np.ndarray, b: np.ndarray) -> float:
    """``||a - b||_F / max(||b||_F, TINY)``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return frobenius_norm(a - b) / max(frobenius_norm(b), TINY)
