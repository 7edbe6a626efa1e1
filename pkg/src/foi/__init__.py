"""FOI (Future/Outside/Inside) country-development analysis."""

__version__ = "0.1.0"

from .cluster import (  # noqa: E402
    ClusterAssignment,
    Dendrogram,
    adjusted_rand_index,
    agglomerate,
    cluster_means,
    cut_k,
    distance_matrix,
)
from .fixture import FoiFixture, load_foi_fixture  # noqa: E402
from .indicators import (  # noqa: E402
    FoiIndices,
    IndicatorSpec,
    IndicatorTable,
    Polarity,
    load_indicator_table,
    validate_table,
)
from .rescale import RescaleParams, aggregate_components, compute_foi_indices, minmax_recode, recode_table  # noqa: E402

__all__ = [
    "ClusterAssignment",
    "Dendrogram",
    "FoiFixture",
    "FoiIndices",
    "IndicatorSpec",
    "IndicatorTable",
    "Polarity",
    "RescaleParams",
    "adjusted_rand_index",
    "agglomerate",
    "aggregate_components",
    "cluster_means",
    "compute_foi_indices",
    "cut_k",
    "distance_matrix",
    "load_foi_fixture",
    "load_indicator_table",
    "minmax_recode",
    "recode_table",
    "validate_table",
]
