"""Krum and m-MultiKrum aggregation with bounds on their robustness coefficient."""

from .adversarial import (
    RatioResult,
    Scenario,
    SearchConfig,
    SearchResult,
    kappa_ratio,
    kappa_ratio_sup_S,
    scenario_krum,
    scenario_three_cluster,
    search_lower_bound,
    verify_lemmas,
)
from .aggregators import (
    CoordinateMedian,
    GeometricMedian,
    Krum,
    Mean,
    MultiKrum,
    TrimmedMean,
    baseline_aggregate,
    multikrum,
    neighbor_set,
    score,
    score_all,
    select_smallest,
)
from .bounds import (
    kappa_const,
    kappa_dec,
    krum_lower,
    multikrum_upper,
    nf_multikrum_lower,
    summary_table,
    transition,
    universal_lower,
)
from .core import PointCloud, cross_identity_eval, pairwise_sqdist, subset_mean, subset_scatter

__version__ = "0.1.0"
