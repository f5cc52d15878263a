"""Multi-granularity non-local recovery driver.

Stage sequence for ``ablation="full"``::

    coarse_init   whole-cube low-Tucker-rank ADMM
    fine_init     whole-cube FCTN/PAM, warm-started from coarse_init
    repeat iters times:
        coarse_nl[u]  k-means++ clusters of full-band blocks, ADMM per cluster
        fine_nl[u]    block-matched 4th-order groups, FCTN/PAM per group

``coarse_only`` drops the FCTN stages, ``fine_only`` drops the ADMM stages
(and the fine init starts from the zero-filled observation).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .coarse import CoarseConfig, coarse_complete
from .degradation import RNG_ALGORITHM, apply_mask, project_observed, sampling_rate
from .fctn import FctnConfig, FctnRankTable, fctn_complete, with_seed
from .grouping import (Cluster, NssGroup, aggregate_groups, block_match,
                       build_cluster_tensor, extract_fullband_blocks, gather_patches,
                       kmeanspp_cluster, scatter_clusters, select_key_patches)
from .metrics import QualityReport, evaluate
from .tensor import relative_change

ABLATIONS = ("full", "coarse_only", "fine_only")


@dataclass(frozen=True)
class PipelineConfig:
    w1: int = 5
    stride1: int = 2
    w2: int = 6
    v: int = 5
    blocks_per_cluster: int = 50
    max_kmeans_iters: int = 100
    k_similar: int = 16
    search_radius: float = 20.0
    iters: int = 3
    coarse: CoarseConfig = field(default_factory=CoarseConfig)
    fctn_init: FctnConfig = field(default_factory=lambda: FctnConfig(ranks=3))
    fctn_group: FctnConfig = field(default_factory=FctnConfig)
    seed: int = 0
    ablation: str = "full"
    normalize_input: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        if self.w1 < 2 or self.w2 < 2:
            raise ValueError("patch widths must be at least 2")
        if self.stride1 < 1 or self.v < 1:
            raise ValueError("strides must be at least 1")
        if self.stride1 > self.w1 or self.v > self.w2:
            raise ValueError("a stride larger than its patch width leaves pixels uncovered")
        if self.iters < 0:
            raise ValueError("iters must be non-negative")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be at least 1")
        if self.blocks_per_cluster < 1 or self.k_similar < 1:
            raise ValueError("blocks_per_cluster and k_similar must be at least 1")

    def cluster_count(self, n_blocks: int) -> int:
        return max(1, math.ceil(n_blocks / self.blocks_per_cluster))


@dataclass
class RecoveryReport:
    stages: list = field(default_factory=list)  # (name, seconds) in execution order
    round_changes: list = field(default_factory=list)
    realized_rate: float = float("nan")
    metrics: QualityReport | None = None
    config: dict = field(default_factory=dict)
    seed: int = 0
    rng_algorithm: str = RNG_ALGORITHM

    def as_dict(self) -> dict:
        d = asdict(self)
        d["metrics"] = self.metrics.as_dict() if self.metrics else None
        return d


StageHook = Callable[[str, np.ndarray, np.ndarray, np.ndarray], None]


def config_to_dict(config: PipelineConfig) -> dict:
    """Flatten a config to ``{dotted.key: value}`` with plain Python values."""
    out = {}
    for name, value in asdict(config).items():
        if isinstance(value, dict):
            for sub, sv in value.items():
                if isinstance(sv, FctnRankTable):
                    sv = sv.upper()
                out[f"{name}.{sub}"] = sv
        else:
            out[name] = value
    return out


def _map(fn, items, n_jobs):
    if n_jobs == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


def coarse_nonlocal_pass(x, t, mask, config: PipelineConfig, round_index: int = 0):
    """Cluster full-band blocks of ``x`` and complete each cluster with ADMM."""
    blocks = extract_fullband_blocks(x, config.w1, config.stride1)
    n_clusters = config.cluster_count(len(blocks))
    member_lists = kmeanspp_cluster(blocks, n_clusters, config.seed + round_index,
                                    config.max_kmeans_iters)

    def complete(members) -> Cluster:
        cl = build_cluster_tensor(members, x, mask, config.w1)
        if not cl.sub_mask.any():
            return cl
        observed = build_cluster_tensor(members, t, mask, config.w1).group_tensor
        cl.group_tensor = coarse_complete(observed, cl.sub_mask, config.coarse,
                                          x0=cl.group_tensor)
        return cl

    clusters = _map(complete, member_lists, config.n_jobs)
    return project_observed(scatter_clusters(clusters, x.shape), t, mask)


def fine_nonlocal_pass(x, t, mask, config: PipelineConfig, round_index: int = 0):
    """Block-match around key patches of ``x`` and complete each group with FCTN."""
    keys = select_key_patches(x.shape, config.w2, config.v)

    def complete(item) -> NssGroup:
        index, key = item
        g = block_match(key, x, config.w2, config.k_similar, config.search_radius, mask=mask)
        if not g.sub_mask.any():
            return g
        observed = gather_patches(t, g.member_origins, config.w2)
        cfg = with_seed(config.fctn_group,
                        config.fctn_group.init_seed + 7919 * round_index + index)
        g.group_tensor = fctn_complete(observed, g.sub_mask, cfg, x0=g.group_tensor)
        return g

    groups = _map(complete, list(enumerate(keys)), config.n_jobs)
    return project_observed(aggregate_groups(groups, x.shape), t, mask)


def recover(t, mask, config: PipelineConfig | None = None, truth=None,
            stage_hook: StageHook | None = None, psnr_mode: str = "band"):
    """Recover the unobserved entries of an order-3 cube.

    Parameters
    ----------
    t : ndarray
        Observed cube; values at unobserved entries are ignored.
    mask : ndarray of bool
        ``True`` where ``t`` is observed.
    config : PipelineConfig
    truth : ndarray, optional
        Ground truth; when given the report carries PSNR/SSIM/RSE.
    stage_hook : callable, optional
        Called as ``stage_hook(name, x, t, mask)`` after every stage, in the
        working (possibly normalized) scale.

    Returns
    -------
    x : ndarray
        Completed cube, equal to ``t`` on every observed entry.
    report : RecoveryReport
    """
    config = config or PipelineConfig()
    t = np.asarray(t, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if t.ndim != 3:
        raise ValueError(f"expected an order-3 cube, got shape {t.shape}")
    if t.shape != mask.shape:
        raise ValueError(f"cube shape {t.shape} does not match mask shape {mask.shape}")
    if not mask.any():
        raise ValueError("mask has no observed entry")
    if not np.all(np.isfinite(t[mask])):
        raise ValueError("observed entries contain NaN or Inf")
    t_obs = apply_mask(t, mask)

    scale = 1.0
    if config.normalize_input:
        peak = float(np.max(np.abs(t_obs)))
        scale = peak if peak > 0 else 1.0
    tw = t_obs / scale

    report = RecoveryReport(realized_rate=sampling_rate(mask),
                            config=config_to_dict(config), seed=config.seed)

    def run(name, fn, *args):
        start = time.perf_counter()
        try:
            out = fn(*args)
        except Exception as exc:
            raise RuntimeError(f"stage {name} failed: {exc}") from exc
        report.stages.append((name, time.perf_counter() - start))
        if stage_hook is not None:
            stage_hook(name, out, tw, mask)
        return out

    use_coarse = config.ablation in ("full", "coarse_only")
    use_fine = config.ablation in ("full", "fine_only")

    x = tw.copy()
    if use_coarse:
        x = run("coarse_init", coarse_complete, tw, mask, config.coarse)
    if use_fine:
        x = run("fine_init", fctn_complete, tw, mask, config.fctn_init, x)

    for u in range(config.iters):
        prev = x
        if use_coarse:
            x = run(f"coarse_nl[{u + 1}]", coarse_nonlocal_pass, x, tw, mask, config, u)
        if use_fine:
            x = run(f"fine_nl[{u + 1}]", fine_nonlocal_pass, x, tw, mask, config, u)
        report.round_changes.append(relative_change(x, prev))

    out = project_observed(x * scale, t_obs, mask)
    if truth is not None:
        truth = np.asarray(truth, dtype=np.float64)
        ref_scale = float(truth.max()) if truth.max() > 0 else 1.0
        report.metrics = evaluate(out / ref_scale, truth / ref_scale, psnr_mode=psnr_mode)
    return out, report


def recover_ablation(t, mask, config: PipelineConfig | None = None, ablation: str = "full",
                     **kwargs):
    config = replace(config or PipelineConfig(), ablation=ablation)
    return recover(t, mask, config, **kwargs)
