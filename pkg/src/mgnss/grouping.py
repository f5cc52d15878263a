"""Non-local patch grouping for both granularities.

Coarse grouping cuts the cube into overlapping full-band blocks, flattens
each to ``w1**2 x n_bands`` and clusters them with k-means++. Fine grouping
picks key patches on a grid and block-matches the ``k`` nearest patches
around each key into a 4th-order group. Completed groups are written back by
overlap-count averaging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .degradation import gather_patches, gather_submask


def grid_origins(length: int, width: int, step: int) -> list:
    """Origins ``0, step, 2*step, ...`` plus a flush final origin at ``length - width``."""
    if width > length:
        raise ValueError(f"patch width {width} exceeds image extent {length}")
    if step < 1:
        raise ValueError("stride must be at least 1")
    origins = list(range(0, length - width + 1, step))
    if origins[-1] != length - width:
        origins.append(length - width)
    return origins


def _grid(dims, width, step):
    rows = grid_origins(dims[0], width, step)
    cols = grid_origins(dims[1], width, step)
    return [(r, c) for r in rows for c in cols]


@dataclass
class FullBandBlock:
    origin: tuple
    data: np.ndarray  # (w1*w1, n_bands)


@dataclass
class Cluster:
    member_origins: list
    group_tensor: np.ndarray  # (w1*w1, n_bands, H)
    sub_mask: np.ndarray
    width: int

    @property
    def size(self) -> int:
        return len(self.member_origins)


@dataclass
class NssGroup:
    key_origin: tuple
    member_origins: list
    group_tensor: np.ndarray  # (w2, w2, n_bands, k)
    sub_mask: np.ndarray
    distances: np.ndarray

    @property
    def width(self) -> int:
        return self.group_tensor.shape[0]


def _flatten_blocks(patches):
    # (w, w, bands, n) -> (w*w, bands, n), rows fastest within the window
    w, _, bands, n = patches.shape
    return np.reshape(patches, (w * w, bands, n), order="F")


def _unflatten_blocks(blocks, width):
    return np.reshape(blocks, (width, width) + blocks.shape[1:], order="F")


def extract_fullband_blocks(x, w1: int, stride1: int) -> list:
    x = np.asarray(x, dtype=np.float64)
    origins = _grid(x.shape, w1, stride1)
    flat = _flatten_blocks(gather_patches(x, origins, w1))
    return [FullBandBlock(o, flat[..., n]) for n, o in enumerate(origins)]


def kmeans_pp(features, n_clusters: int, seed: int, max_iters: int = 100):
    """k-means++ seeding followed by Lloyd iterations.

    Returns ``(labels, centers)``. Stops once assignments no longer change;
    ties go to the lowest center index. A center that loses all its points
    keeps its previous position.
    """
    feats = np.asarray(features, dtype=np.float64)
    n = feats.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError(f"cannot form {n_clusters} clusters from {n} points")
    rng = np.random.Generator(np.random.PCG64(seed))

    centers = np.empty((n_clusters, feats.shape[1]))
    centers[0] = feats[rng.integers(n)]
    closest = np.sum((feats - centers[0]) ** 2, axis=1)
    for c in range(1, n_clusters):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = int(rng.integers(n))
        centers[c] = feats[idx]
        closest = np.minimum(closest, np.sum((feats - centers[c]) ** 2, axis=1))

    labels = None
    for _ in range(max_iters):
        d2 = _sq_dists(feats, centers)
        new_labels = np.argmin(d2, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(n_clusters):
            members = labels == c
            if members.any():
                centers[c] = feats[members].mean(axis=0)
    return labels, centers


def _sq_dists(a, b):
    return np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2)


def kmeanspp_cluster(blocks, n_clusters: int, seed: int, max_kmeans_iters: int = 100) -> list:
    """Partition blocks into clusters; returns a list of origin lists.

    Empty clusters are dropped, so fewer than ``n_clusters`` lists may come
    back. Members keep their extraction order.
    """
    feats = np.stack([b.data.ravel(order="F") for b in blocks])
    labels, _ = kmeans_pp(feats, n_clusters, seed, max_kmeans_iters)
    out = []
    for c in range(n_clusters):
        members = [blocks[i].origin for i in np.flatnonzero(labels == c)]
        if members:
            out.append(members)
    return out


def build_cluster_tensor(member_origins, x, mask, w1: int) -> Cluster:
    if not member_origins:
        raise ValueError("a cluster needs at least one member")
    data = _flatten_blocks(gather_patches(np.asarray(x, dtype=np.float64), member_origins, w1))
    sub = _flatten_blocks(gather_submask(mask, member_origins, w1))
    return Cluster(list(member_origins), data, sub, w1)


class Accumulator:
    """Running sum and contribution count for overlap averaging."""

    def __init__(self, dims):
        self.sum = np.zeros(dims)
        self.weight = np.zeros(dims[:2])

    def add(self, origin, patch, weight: float = 1.0):
        r, c = origin
        w = patch.shape[0]
        self.sum[r:r + w, c:c + w] += weight * patch
        self.weight[r:r + w, c:c + w] += weight

    def finalize(self) -> np.ndarray:
        if np.any(self.weight <= 0):
            r, c = np.argwhere(self.weight <= 0)[0]
            raise ValueError(f"pixel ({r}, {c}) is not covered by any patch")
        return self.sum / self.weight[:, :, None]


def scatter_clusters(clusters, dims) -> np.ndarray:
    """Average completed cluster tensors back into an image of shape ``dims``."""
    acc = Accumulator(tuple(dims))
    for cl in clusters:
        patches = _unflatten_blocks(cl.group_tensor, cl.width)
        for n, origin in enumerate(cl.member_origins):
            acc.add(origin, patches[..., n])
    return acc.finalize()


def select_key_patches(dims, w2: int, v: int) -> list:
    return _grid(dims, w2, v)


def block_match(key_origin, x, w2: int, k: int, search_radius: float = 20,
                mask=None) -> NssGroup:
    """Group the key patch with its ``k - 1`` nearest patches.

    Candidates are all stride-1 origins whose row and column offsets from the
    key are within ``search_radius`` (``np.inf`` scans the whole image).
    Distances are squared Euclidean over the whole ``w2 x w2 x bands`` patch.
    The key always comes first; other ties are broken in row-major order.
    If fewer than ``k`` candidates exist, all of them are used.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if not search_radius >= 0:
        raise ValueError("search radius must be non-negative")
    x = np.asarray(x, dtype=np.float64)
    n_rows, n_cols = x.shape[:2]
    kr, kc = key_origin
    if not (0 <= kr <= n_rows - w2 and 0 <= kc <= n_cols - w2):
        raise IndexError(f"key origin {key_origin} out of bounds")

    if np.isfinite(search_radius):
        r_lo = max(0, int(np.ceil(kr - search_radius)))
        c_lo = max(0, int(np.ceil(kc - search_radius)))
        r_hi = min(n_rows - w2, int(np.floor(kr + search_radius)))
        c_hi = min(n_cols - w2, int(np.floor(kc + search_radius)))
    else:
        r_lo, c_lo, r_hi, c_hi = 0, 0, n_rows - w2, n_cols - w2

    key = x[kr:kr + w2, kc:kc + w2]
    window = x[r_lo:r_hi + w2, c_lo:c_hi + w2]
    views = np.lib.stride_tricks.sliding_window_view(window, (w2, w2), axis=(0, 1))
    # views: (nr, nc, bands, w2, w2)
    diff = views - np.moveaxis(key, 2, 0)[None, None]
    dist = np.sum(diff ** 2, axis=(2, 3, 4))

    rows, cols = np.meshgrid(np.arange(r_lo, r_hi + 1), np.arange(c_lo, c_hi + 1), indexing="ij")
    rows, cols, dist = rows.ravel(), cols.ravel(), dist.ravel()
    is_key = (rows == kr) & (cols == kc)
    order = np.lexsort((cols, rows, dist, ~is_key))
    chosen = order[:k]
    origins = [(int(rows[i]), int(cols[i])) for i in chosen]

    group = gather_patches(x, origins, w2)
    sub = gather_submask(mask, origins, w2) if mask is not None else np.ones(group.shape, bool)
    return NssGroup(tuple(key_origin), origins, group, sub, dist[chosen])


def aggregate_groups(groups, dims) -> np.ndarray:
    """Average completed NSS groups back into an image.

    Groups are added in key-origin row-major order and members in rank
    order, so the floating-point summation order is fixed.
    """
    acc = Accumulator(tuple(dims))
    for g in sorted(groups, key=lambda g: g.key_origin):
        for n, origin in enumerate(g.member_origins):
            acc.add(origin, g.group_tensor[..., n])
    return acc.finalize()
