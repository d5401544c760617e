"""Credible subpartitions and clustering uncertainty from MCMC partition draws."""

from .chips import ChipsRegion, GreedyTrace, StabilityReport, chips, greedy_run, stability_report
from .draws import (
    ConsistencyMask,
    DrawSet,
    cluster_probability,
    estimate_probability,
    extend_mask,
    mask_for,
)
from .estimate import LossSpec, complete_partition, expected_loss, vi_distance
from .infer import ClusterCredibleRegion, ParamTable, conditional_samples, credible_region
from .metrics import ChipsCurve, UnitUncertainty, chips_curve, unit_uncertainty
from .partition import Partition, Subpartition, canonicalize, is_consistent, restrict

__version__ = "0.1.0"

__all__ = [
    "ChipsCurve",
    "ChipsRegion",
    "ClusterCredibleRegion",
    "ConsistencyMask",
    "DrawSet",
    "GreedyTrace",
    "LossSpec",
    "ParamTable",
    "Partition",
    "StabilityReport",
    "Subpartition",
    "UnitUncertainty",
    "canonicalize",
    "chips",
    "chips_curve",
    "cluster_probability",
    "complete_partition",
    "conditional_samples",
    "credible_region",
    "estimate_probability",
    "expected_loss",
    "extend_mask",
    "greedy_run",
    "is_consistent",
    "mask_for",
    "restrict",
    "stability_report",
    "unit_uncertainty",
    "vi_distance",
]
