"""Comparative painting analysis: align a source photograph with a painting,
compare multi-scale edge maps, and extract centre-of-interest boxes."""

from .diffmap import DiffClass, OverlayPalette, classify_difference, render_overlay, residual_mask
from .edges import (
    GradientPair,
    MultiscaleConfig,
    binarize,
    gradient_magnitude,
    import_edge_map,
    multiscale_edge_map,
    non_max_suppression,
    otsu_threshold,
    sobel_edge_map,
    sobel_gradients,
)
from .interest import (
    Component,
    InterestBox,
    InterestParams,
    centres_of_interest,
    connected_components,
    extend_box,
    filter_components,
    merge_overlapping,
)
from .pipeline import PipelineConfig, run_pipeline
from .raster import load_gray, load_image, resize_bilinear, save_gray, save_rgb, to_grayscale
from .registration import (
    DegenerateImageError,
    RegistrationResult,
    SearchConfig,
    SimilarityTransform,
    apply_transform,
    best_first_register,
    entropy,
    generate_children,
    invert,
    mutual_information,
)

__version__ = "0.1.0"
