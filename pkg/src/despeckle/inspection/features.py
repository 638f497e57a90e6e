"""Per-layer feature-map extraction from the low-noise generator.

Every channel of a named stage's activation is exposed as a grayscale
image: raw values for analysis plus a per-channel [0, 1] normalization
for display.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..data.bscan import BScan
from ..errors import ConfigError, DataError
from ..model.checkpoint import Checkpoint
from ..model.nets import Generator, GeneratorSpec
from ..model.train import to_tensor


def generator_layer_names(spec: GeneratorSpec) -> list[str]:
    names = ["initial convolution"]
    names += [f"down-sampling {i}" for i in range(1, spec.n_downsample + 1)]
    names += [f"residual block {i}" for i in range(1, spec.n_resblocks + 1)]
    names += [f"up-sampling {i}" for i in range(1, spec.n_downsample + 1)]
    names.append("final convolution")
    return names


def _normalize(channel: np.ndarray) -> np.ndarray:
    lo, hi = channel.min(), channel.max()
    if hi > lo:
        return (channel - lo) / (hi - lo)
    return np.zeros_like(channel)


@dataclass(frozen=True)
class FeatureMapSet:
    layer_name: str
    maps: list  # per-channel, normalized to [0, 1]
    raw_maps: list  # per-channel, unnormalized activations
    native_height: int
    native_width: int
    upscaled: bool = False

    def __post_init__(self):
        if len(self.maps) != len(self.raw_maps):
            raise ValueError("normalized and raw channel counts differ")
        shapes = {m.shape for m in self.maps} | {m.shape for m in self.raw_maps}
        if len(shapes) > 1:
            raise ValueError(f"maps in a set must share dimensions, got {shapes}")

    def __len__(self) -> int:
        return len(self.maps)

    def upscaled_to(self, height: int, width: int) -> "FeatureMapSet":
        """Bilinear upscale of every channel to the given size."""
        return FeatureMapSet(
            layer_name=self.layer_name,
            maps=[upscale_map(m, (height, width)) for m in self.maps],
            raw_maps=[upscale_map(m, (height, width)) for m in self.raw_maps],
            native_height=self.native_height,
            native_width=self.native_width,
            upscaled=True,
        )


def upscale_map(map2d: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Bilinear resize of a 2D array to an exact target shape."""
    if map2d.shape == tuple(shape):
        return np.asarray(map2d, dtype=np.float64).copy()
    tensor = torch.as_tensor(np.asarray(map2d, dtype=np.float64))[None, None]
    resized = torch.nn.functional.interpolate(
        tensor, size=tuple(shape), mode="bilinear", align_corners=False
    )
    return resized[0, 0].numpy()


def extract_feature_maps(ckpt: Checkpoint, img: BScan, layer: str) -> FeatureMapSet:
    """Channel activations of the low-noise generator at a named stage."""
    valid = generator_layer_names(ckpt.gen_spec)
    if layer not in valid:
        raise ConfigError(f"unknown layer {layer!r}; expected one of: {', '.join(valid)}")
    h, w = img.pixels.shape
    divisor = ckpt.gen_spec.divisor
    if h % divisor or w % divisor:
        raise DataError(f"image dims ({h}, {w}) must be divisible by {divisor}; pad first")
    gen = Generator(ckpt.gen_spec)
    gen.load_state_dict(ckpt.generator_l_params)
    gen.eval()
    with torch.no_grad():
        _, acts = gen.forward_with_activations(to_tensor(img))
    stack = acts[layer].squeeze(0).numpy().astype(np.float64)
    raw = [stack[c] for c in range(stack.shape[0])]
    return FeatureMapSet(
        layer_name=layer,
        maps=[_normalize(c) for c in raw],
        raw_maps=raw,
        native_height=stack.shape[1],
        native_width=stack.shape[2],
    )
