"""Observation masks for random pixel and random stripe missing.

A mask is a boolean array, ``True`` where the entry is observed. Sampling
rates are the observed fraction. Random draws use numpy's ``PCG64`` bit
generator seeded directly with the user seed, so masks are a pure function
of ``(dims, rate, seed)``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

RNG_ALGORITHM = "numpy.random.PCG64"
DEGRADATION_KINDS = ("pixel", "stripe")


def _check_rate(rate: float) -> float:
    rate = float(rate)
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"sampling rate must lie in (0, 1], got {rate}")
    return rate


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def make_pixel_mask(dims: Sequence[int], sampling_rate: float, seed: int) -> np.ndarray:
    """Observe exactly ``round(rate * total)`` entries chosen uniformly."""
    rate = _check_rate(sampling_rate)
    dims = tuple(int(d) for d in dims)
    total = int(np.prod(dims, dtype=np.int64))
    n_obs = _round_half_up(rate * total)
    if n_obs == 0:
        raise ValueError(f"rate {rate} observes no entry of a tensor with {total} entries")
    rng = np.random.Generator(np.random.PCG64(seed))
    flat = np.zeros(total, dtype=bool)
    flat[rng.choice(total, size=n_obs, replace=False)] = True
    return np.reshape(flat, dims, order="F")


def make_stripe_mask(dims: Sequence[int], sampling_rate: float, seed: int) -> np.ndarray:
    """Keep ``round(rate * I2)`` full-height columns per band, drawn per band."""
    rate = _check_rate(sampling_rate)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ValueError(f"stripe masks need an order-3 cube, got dims {dims}")
    n_rows, n_cols, n_bands = dims
    keep = _round_half_up(rate * n_cols)
    if keep == 0:
        raise ValueError(
            f"rate {rate} keeps no column out of {n_cols}; every band would be unobserved")
    rng = np.random.Generator(np.random.PCG64(seed))
    mask = np.zeros(dims, dtype=bool)
    for b in range(n_bands):
        mask[:, rng.choice(n_cols, size=keep, replace=False), b] = True
    return mask


def make_mask(kind: str, dims, sampling_rate, seed) -> np.ndarray:
    if kind == "pixel":
        return make_pixel_mask(dims, sampling_rate, seed)
    if kind == "stripe":
        return make_stripe_mask(dims, sampling_rate, seed)
    raise ValueError(f"unknown degradation kind {kind!r}; expected 'pixel' or 'stripe'")


def sampling_rate(mask: np.ndarray) -> float:
    """Realized observed fraction of ``mask``."""
    mask = np.asarray(mask, dtype=bool)
    return float(np.count_nonzero(mask)) / mask.size


def _check_same_shape(*arrays):
    shape = np.shape(arrays[0])
    for a in arrays[1:]:
        if np.shape(a) != shape:
            raise ValueError(f"shape mismatch {shape} vs {np.shape(a)}")


def apply_mask(t: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Copy observed entries, zero elsewhere."""
    _check_same_shape(t, mask)
    return np.where(mask, np.asarray(t, dtype=np.float64), 0.0)


def project_observed(x: np.ndarray, t: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """``t`` on observed entries, ``x`` elsewhere."""
    _check_same_shape(x, t, mask)
    return np.where(mask, np.asarray(t, dtype=np.float64), np.asarray(x, dtype=np.float64))


def gather_patches(x: np.ndarray, origins, width: int) -> np.ndarray:
    """Stack ``width x width`` full-band patches at ``origins`` along a new last axis.

    Works for data and masks alike; the result has shape
    ``(width, width, n_bands, len(origins))``.
    """
    x = np.asarray(x)
    n_rows, n_cols = x.shape[:2]
    out = np.empty((width, width) + x.shape[2:] + (len(origins),), dtype=x.dtype)
    for n, (r, c) in enumerate(origins):
        if not (0 <= r <= n_rows - width and 0 <= c <= n_cols - width):
            raise IndexError(
                f"patch origin ({r}, {c}) with width {width} leaves a "
                f"{n_rows}x{n_cols} image")
        out[..., n] = x[r:r + width, c:c + width]
    return out


def gather_submask(mask: np.ndarray, origins, width: int) -> np.ndarray:
    return gather_patches(np.asarray(mask, dtype=bool), origins, width)
