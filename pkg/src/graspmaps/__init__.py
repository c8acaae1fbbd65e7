"""Orientation-binned grasp maps for antipodal grasp detection.

Parses grasp-rectangle annotations, renders them into per-orientation-bin
map stacks, extracts grasps back out of the maps, exposes the training
objective as pure functions, and scores reconstructions with the rotated
rectangle IoU metric.
"""

from .annotations import (
    AnnotationError,
    AnnotationSet,
    SynthParams,
    load_depth,
    parse_cornell,
    parse_jacquard,
    scale_annotations,
    serialize_jacquard,
    synth_scene,
)
from .evaluation import (
    BUILDERS,
    DisentanglementReport,
    EvalReport,
    SceneDisentanglement,
    ThresholdResult,
    config_fingerprint,
    disentanglement_report,
    grasp_success,
    reconstruct_and_score,
)
from .geometry import (
    GraspRect,
    PixelRegion,
    angular_distance,
    center_pixel,
    clip_convex,
    normalize_angle,
    points_to_rect,
    polygon_area,
    rasterize_rect,
    rect_axes,
    rect_corners,
    rect_iou,
)
from .inference import (
    BCE_EPS,
    FusedQuality,
    LossBreakdown,
    NoGraspError,
    default_suppression_radius,
    extract_best,
    extract_legacy_best,
    extract_per_bin,
    fuse_quality,
    reconstruct_box,
    suppression_radius_from_heights,
    total_loss,
)
from .mapbuild import (
    BuilderConfig,
    GraspMapStack,
    LegacyMapStack,
    bin_index,
    bin_interval,
    build_binned_maps,
    build_legacy_maps,
    decode_angle,
    encode_angle,
    soft_quality_value,
)
from .stackio import (
    FORMAT_VERSION,
    StackFormatError,
    channel_names,
    load_stack,
    save_stack,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationError",
    "AnnotationSet",
    "BUILDERS",
    "BuilderConfig",
    "DisentanglementReport",
    "EvalReport",
    "FORMAT_VERSION",
    "FusedQuality",
    "GraspMapStack",
    "GraspRect",
    "LegacyMapStack",
    "BCE_EPS",
    "LossBreakdown",
    "NoGraspError",
    "PixelRegion",
    "SceneDisentanglement",
    "StackFormatError",
    "SynthParams",
    "ThresholdResult",
    "angular_distance",
    "bin_index",
    "bin_interval",
    "build_binned_maps",
    "build_legacy_maps",
    "center_pixel",
    "channel_names",
    "clip_convex",
    "config_fingerprint",
    "decode_angle",
    "default_suppression_radius",
    "disentanglement_report",
    "encode_angle",
    "extract_best",
    "extract_legacy_best",
    "extract_per_bin",
    "fuse_quality",
    "grasp_success",
    "load_depth",
    "load_stack",
    "normalize_angle",
    "parse_cornell",
    "parse_jacquard",
    "points_to_rect",
    "polygon_area",
    "rasterize_rect",
    "reconstruct_and_score",
    "reconstruct_box",
    "rect_axes",
    "rect_corners",
    "rect_iou",
    "save_stack",
    "scale_annotations",
    "serialize_jacquard",
    "soft_quality_value",
    "suppression_radius_from_heights",
    "synth_scene",
    "total_loss",
]
