"""Multi-granularity non-local tensor completion for hyperspectral cubes."""

from .coarse import CoarseConfig, coarse_complete
from .degradation import apply_mask, make_pixel_mask, make_stripe_mask, project_observed
from .estimators import FCTNCompleter, MGNSSCompleter, TuckerCompleter
from .fctn import FctnConfig, FctnRankTable, fctn_complete, fctn_contract
from .metrics import QualityReport, evaluate
from .pipeline import PipelineConfig, RecoveryReport, recover, recover_ablation

__version__ = "0.1.0"

__all__ = [
    "CoarseConfig", "FCTNCompleter", "FctnConfig", "FctnRankTable", "MGNSSCompleter",
    "PipelineConfig", "QualityReport", "RecoveryReport", "TuckerCompleter", "apply_mask",
    "coarse_complete", "evaluate", "fctn_complete", "fctn_contract", "make_pixel_mask",
    "make_stripe_mask", "project_observed", "recover", "recover_ablation",
]
