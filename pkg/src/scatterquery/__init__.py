"""Pattern search over scatterplot collections.

Pipeline: load a wide table, enumerate candidate scatterplots, preprocess
each into a normalized point set, bin into a multi-resolution heatmap
pyramid, then rank against region or similarity queries.
"""

from .engine import (
    Collection,
    PrunedResults,
    RankedResult,
    build_collection,
    query_region,
    query_similar,
    query_similar_pruned,
)
from .errors import ScatterQueryError
from .heatmap import (
    HeatmapLevel,
    HeatmapPyramid,
    PyramidConfig,
    bin_points,
    block_downsample,
    build_pyramid,
    to_density,
)
from .ingest import (
    AttributeCatalog,
    CsvFormat,
    Filter,
    RawPointSet,
    ScatterplotSpec,
    Table,
    classify_attributes,
    enumerate_by_category,
    enumerate_pairwise,
    load_table,
    materialize,
)
from .preprocess import (
    Extent,
    PointSet,
    PreprocessConfig,
    clip_outliers,
    normalize,
    run_pipeline,
    sample,
)
from .scoring import (
    Region,
    Score,
    WeightSchedule,
    default_weights,
    emd_exact,
    level_distance,
    mld,
    region_score,
)
from .storage import load_collection, save_collection

__version__ = "0.1.0"

__all__ = [
    "AttributeCatalog",
    "Collection",
    "CsvFormat",
    "Extent",
    "Filter",
    "HeatmapLevel",
    "HeatmapPyramid",
    "PointSet",
    "PreprocessConfig",
    "PrunedResults",
    "PyramidConfig",
    "RankedResult",
    "RawPointSet",
    "Region",
    "ScatterQueryError",
    "ScatterplotSpec",
    "Score",
    "Table",
    "WeightSchedule",
    "bin_points",
    "block_downsample",
    "build_collection",
    "build_pyramid",
    "classify_attributes",
    "clip_outliers",
    "default_weights",
    "emd_exact",
    "enumerate_by_category",
    "enumerate_pairwise",
    "level_distance",
    "load_collection",
    "load_table",
    "materialize",
    "mld",
    "normalize",
    "query_region",
    "query_similar",
    "query_similar_pruned",
    "region_score",
    "run_pipeline",
    "sample",
    "save_collection",
    "to_density",
]
