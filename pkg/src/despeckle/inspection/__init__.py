"""Inspection of trained generators: feature maps, overlays, layer skeletons."""

from .features import (
    FeatureMapSet,
    extract_feature_maps,
    generator_layer_names,
    upscale_map,
)
from .overlay import colormap, overlay, write_overlay_grid
from .skeleton import (
    LayerSkeleton,
    ThicknessProfile,
    curve_pixels,
    rank_tracker_channels,
    skeletonize_layers,
    thickness_profile,
    write_thickness_csv,
)

__all__ = [
    "FeatureMapSet",
    "extract_feature_maps",
    "generator_layer_names",
    "upscale_map",
    "colormap",
    "overlay",
    "write_overlay_grid",
    "LayerSkeleton",
    "ThicknessProfile",
    "curve_pixels",
    "rank_tracker_channels",
    "skeletonize_layers",
    "thickness_profile",
    "write_thickness_csv",
]
