"""Salient dither pattern features.

Error-diffusion dithering to the 8 RGB-cube corners, salient 2x2 dither
pattern detection via a Hessian response over pattern dissimilarities,
a rotation-robust spatial-chromatic histogram descriptor, and a
polynomial-kernel SVM evaluation harness.
"""

from .classifier import (
    BinarySvm,
    SvmConfig,
    SvmModel,
    decision_values,
    knn_predict,
    load_model,
    predict,
    save_model,
    train,
)
from .descriptor import (
    DEFAULT_CONFIG,
    DescriptorConfig,
    ExtractionResult,
    OrientationFrame,
    SdpfDescriptor,
    angle_bins,
    build_descriptor,
    centroid,
    distance_bins,
    dominant_orientation,
    extract,
    extract_detailed,
    read_descriptors_csv,
    write_descriptors_csv,
)
from .dithering import (
    CoefficientProvider,
    DEFAULT_COEFFICIENTS,
    DEFAULT_PALETTE,
    DitherPalette,
    IndexedImage,
    dither,
    indexed_to_image,
    quantize_pixel,
)
from .evaluation import (
    BenchReport,
    Dataset,
    EvalReport,
    Split,
    SplitItem,
    augment_rotations,
    average_precision,
    bench,
    evaluate,
    extract_items,
    ingest,
    split,
)
from .imaging import (
    Image,
    MalformedImageError,
    UnsupportedImageError,
    load_image,
    resize,
    rotate90,
    save_image,
)
from .patterns import (
    DitherPattern,
    PatternGrid,
    build_grid,
    canonical_patterns,
    dissimilarity,
)
from .saliency import (
    DEFAULT_NMS_WINDOW,
    HessianResponse,
    SdpfPoint,
    detect,
    hessian_response,
    non_max_suppress,
    threshold_candidates,
)

__version__ = "0.1.0"
