"""Unsupervised multispectral image segmentation.

Morphological filtering finds homogeneous seed regions, k-means groups
them into labels, and a competitive cellular automaton grows the labels
until the image is partitioned; segments export as label rasters and
boundary polygons.
"""

from .clustering import KMeansResult, apply_labels, best_of_restarts, kmeans
from .errors import (
    ConfigError,
    DependencyError,
    EmptyInputError,
    EmptySeedsError,
    GrowSegError,
    ParseError,
    SizeError,
)
from .growcut import (
    AutomatonState,
    GrowCutParams,
    GrowCutResult,
    build_features,
    g,
    init_automaton,
    run,
    step_active_set,
    step_synchronous,
)
from .morphology import (
    BinaryMask,
    StructuringElement,
    asf,
    diamond,
    dilate,
    erode,
    multiscale_gradient,
    regional_minima,
    square,
)
from .pipeline import PipelineConfig, RunManifest, run_pipeline, run_stage
from .raster import (
    Band,
    LabelRaster,
    MultiBandRaster,
    RasterHeader,
    load_label_raster,
    load_raster,
    normalize_bands,
    save_label_raster,
    save_raster,
)
from .rng import Prng
from .seeding import (
    SeedRegion,
    SeedSet,
    compute_descriptors,
    connected_components,
    ndvi,
    prune_small,
    scale_descriptors,
    seed_descriptor,
)
from .vectorize import PolygonSet, Polygon, export_polygons, render_overlay, trace_contours

__version__ = "0.1.0"
