"""Classical comparison denoisers and their shared parameter registry."""

from .bm3d import Bm3dProfile, bm3d_denoise
from .classic import bilateral_denoise, median_denoise, nlmeans_denoise
from .params import (
    DEFAULT_PARAMS,
    METHODS,
    DenoiserParams,
    get_denoiser,
    load_param_file,
    run_baseline,
)
from .wavelets import (
    estimate_noise_sigma,
    wavedec2,
    waverec2,
    wavelet_denoise,
)

__all__ = [
    "DEFAULT_PARAMS",
    "METHODS",
    "Bm3dProfile",
    "DenoiserParams",
    "bilateral_denoise",
    "bm3d_denoise",
    "estimate_noise_sigma",
    "get_denoiser",
    "load_param_file",
    "median_denoise",
    "nlmeans_denoise",
    "run_baseline",
    "wavedec2",
    "waverec2",
    "wavelet_denoise",
]
