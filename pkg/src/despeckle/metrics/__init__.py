"""Image quality metrics, rigid registration, and mask-driven evaluation."""

from .evaluate import (
    MethodRow,
    MetricReport,
    RuntimeReport,
    RuntimeRow,
    benchmark_runtime,
    evaluate_method,
    evaluate_methods,
)
from .masks import MaskPair, extract_masks, write_mask_overlay
from .quality import cnr, msr, psnr, ssim
from .registration import Shift, align_to, apply_shift, overlap_slices, register_translation

__all__ = [
    "MaskPair",
    "MethodRow",
    "MetricReport",
    "RuntimeReport",
    "RuntimeRow",
    "Shift",
    "align_to",
    "apply_shift",
    "benchmark_runtime",
    "cnr",
    "evaluate_method",
    "evaluate_methods",
    "extract_masks",
    "msr",
    "overlap_slices",
    "psnr",
    "register_translation",
    "ssim",
    "write_mask_overlay",
]
