"""Generator and discriminator networks.

The generator is an encoder/decoder with a residual bottleneck and skip
connections that concatenate each down-sampling stage's output onto the
input of its mirrored up-sampling stage (the initial convolution is not
skipped). Up-sampling is a resize-convolution: bilinear doubling followed
by a padded convolution, which avoids the checkerboard artifacts of
fractionally strided convolutions; the latter remain available for
ablations via ``upsample_mode``.

The discriminator alternates strided convolutions with residual blocks,
doubling channels at each stage, then applies per-channel global average
pooling and a linear head. Its final activation is a softmax with no
normalization layer. With three classes it scores real high-noise, real
low-noise, and generated images in one shared network; with two classes it
acts as a per-domain real/fake discriminator.

All hidden layers use instance normalization and ReLU. The generator's
final convolution is linear so gradients flow freely near zero; outputs
are clipped to [0, 1] at inference time only.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ConfigError


@dataclass(frozen=True)
class GeneratorSpec:
    base_channels: int = 16
    n_downsample: int = 3
    n_resblocks: int = 6
    convs_per_resblock: int = 3
    initial_kernel: int = 7
    kernel: int = 3
    norm: str = "instance"
    activation: str = "relu"
    skip_connections: bool = True
    upsample_mode: str = "resize_conv"

    def __post_init__(self):
        if self.base_channels < 1:
            raise ConfigError(f"base_channels must be >= 1, got {self.base_channels}")
        if self.n_downsample < 1:
            raise ConfigError(f"n_downsample must be >= 1, got {self.n_downsample}")
        if self.n_resblocks < 0:
            raise ConfigError(f"n_resblocks must be >= 0, got {self.n_resblocks}")
        if self.convs_per_resblock < 1:
            raise ConfigError(f"convs_per_resblock must be >= 1, got {self.convs_per_resblock}")
        for name in ("initial_kernel", "kernel"):
            k = getattr(self, name)
            if k < 1 or k % 2 == 0:
                raise ConfigError(f"{name} must be an odd integer >= 1, got {k}")
        if self.norm != "instance":
            raise ConfigError(f"unsupported norm {self.norm!r}")
        if self.activation != "relu":
            raise ConfigError(f"unsupported activation {self.activation!r}")
        if self.upsample_mode not in ("resize_conv", "fractional_stride"):
            raise ConfigError(f"unsupported upsample_mode {self.upsample_mode!r}")

    @property
    def divisor(self) -> int:
        return 1 << self.n_downsample


@dataclass(frozen=True)
class DiscriminatorSpec:
    base_channels: int = 16
    n_downsample: int = 7
    convs_per_resblock: int = 2
    n_classes: int = 3
    head: str = "global_average_pool_then_linear"

    def __post_init__(self):
        if self.base_channels < 1:
            raise ConfigError(f"base_channels must be >= 1, got {self.base_channels}")
        if self.n_downsample < 1:
            raise ConfigError(f"n_downsample must be >= 1, got {self.n_downsample}")
        if self.convs_per_resblock < 1:
            raise ConfigError(f"convs_per_resblock must be >= 1, got {self.convs_per_resblock}")
        if self.n_classes not in (2, 3):
            raise ConfigError(f"n_classes must be 2 or 3, got {self.n_classes}")
        if self.head != "global_average_pool_then_linear":
            raise ConfigError(f"unsupported head {self.head!r}")


def init_weights_normal(module: nn.Module, std: float = 0.02) -> None:
    """Convolution/linear weights from normal(0, std), biases zero."""
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
        nn.init.normal_(module.weight, mean=0.0, std=std)
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def _conv_norm_relu(cin: int, cout: int, kernel: int, stride: int = 1) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(
            cin, cout, kernel, stride=stride, padding=kernel // 2, padding_mode="reflect"
        ),
        nn.InstanceNorm2d(cout),
        nn.ReLU(inplace=True),
    )


class ResidualBlock(nn.Module):
    def __init__(self, channels: int, n_convs: int, kernel: int):
        super().__init__()
        self.body = nn.Sequential(
            *[_conv_norm_relu(channels, channels, kernel) for _ in range(n_convs)]
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.body(x)


class Generator(nn.Module):
    def __init__(self, spec: GeneratorSpec | None = None):
        super().__init__()
        spec = spec or GeneratorSpec()
        self.spec = spec
        ch = spec.base_channels
        self.initial = _conv_norm_relu(1, ch, spec.initial_kernel)
        downs = []
        for _ in range(spec.n_downsample):
            downs.append(_conv_norm_relu(ch, ch * 2, spec.kernel, stride=2))
            ch *= 2
        self.downs = nn.ModuleList(downs)
        self.resblocks = nn.ModuleList(
            ResidualBlock(ch, spec.convs_per_resblock, spec.kernel)
            for _ in range(spec.n_resblocks)
        )
        ups = []
        for _ in range(spec.n_downsample):
            cin = ch * 2 if spec.skip_connections else ch
            cout = ch // 2
            if spec.upsample_mode == "resize_conv":
                ups.append(
                    nn.Sequential(
                        nn.Upsample(scale_factor=2.0, mode="bilinear", align_corners=False),
                        nn.Conv2d(
                            cin,
                            cout,
                            spec.kernel,
                            padding=spec.kernel // 2,
                            padding_mode="reflect",
                        ),
                        nn.InstanceNorm2d(cout),
                        nn.ReLU(inplace=True),
                    )
                )
            else:
                ups.append(
                    nn.Sequential(
                        nn.ConvTranspose2d(
                            cin,
                            cout,
                            spec.kernel,
                            stride=2,
                            padding=spec.kernel // 2,
                            output_padding=1,
                        ),
                        nn.InstanceNorm2d(cout),
                        nn.ReLU(inplace=True),
                    )
                )
            ch = cout
        self.ups = nn.ModuleList(ups)
        self.final = nn.Conv2d(
            ch, 1, spec.kernel, padding=spec.kernel // 2, padding_mode="reflect"
        )
        self.apply(init_weights_normal)

    def _check_input(self, x: torch.Tensor) -> None:
        if x.ndim != 4 or x.shape[1] != 1:
            raise ValueError(f"expected input of shape (N, 1, H, W), got {tuple(x.shape)}")
        d = self.spec.divisor
        if x.shape[2] % d or x.shape[3] % d:
            raise ValueError(
                f"input dims {tuple(x.shape[2:])} must be divisible by {d}"
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out, _ = self.forward_with_activations(x)
        return out

    def forward_with_activations(
        self, x: torch.Tensor
    ) -> tuple[torch.Tensor, dict[str, torch.Tensor]]:
        """Forward pass that also returns every stage's output keyed by the
        stage name, e.g. "down-sampling 2" or "residual block 5"."""
        self._check_input(x)
        acts: dict[str, torch.Tensor] = {}
        x = self.initial(x)
        acts["initial convolution"] = x
        skips = []
        for i, down in enumerate(self.downs, start=1):
            x = down(x)
            acts[f"down-sampling {i}"] = x
            skips.append(x)
        for i, block in enumerate(self.resblocks, start=1):
            x = block(x)
            acts[f"residual block {i}"] = x
        for i, up in enumerate(self.ups, start=1):
            if self.spec.skip_connections:
                x = torch.cat([x, skips[self.spec.n_downsample - i]], dim=1)
            x = up(x)
            acts[f"up-sampling {i}"] = x
        x = self.final(x)
        acts["final convolution"] = x
        return x, acts


class Discriminator(nn.Module):
    def __init__(self, spec: DiscriminatorSpec | None = None):
        super().__init__()
        spec = spec or DiscriminatorSpec()
        self.spec = spec
        stages = []
        cin = 1
        ch = spec.base_channels
        for _ in range(spec.n_downsample):
            stages.append(_conv_norm_relu(cin, ch, 3, stride=2))
            stages.append(ResidualBlock(ch, spec.convs_per_resblock, 3))
            cin = ch
            ch *= 2
        self.stages = nn.ModuleList(stages)
        self.head = nn.Linear(cin, spec.n_classes)
        self.apply(init_weights_normal)

    def _check_input(self, x: torch.Tensor) -> None:
        if x.ndim != 4 or x.shape[1] != 1:
            raise ValueError(f"expected input of shape (N, 1, H, W), got {tuple(x.shape)}")
        minimum = 1 << self.spec.n_downsample
        if x.shape[2] < minimum or x.shape[3] < minimum:
            raise ValueError(
                f"input dims {tuple(x.shape[2:])} must be at least {minimum}px"
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out, _ = self.forward_with_activations(x)
        return out

    def forward_with_activations(
        self, x: torch.Tensor
    ) -> tuple[torch.Tensor, dict[str, torch.Tensor]]:
        self._check_input(x)
        acts: dict[str, torch.Tensor] = {}
        for i in range(0, len(self.stages), 2):
            x = self.stages[i](x)
            acts[f"down-sampling {i // 2 + 1}"] = x
            x = self.stages[i + 1](x)
            acts[f"residual block {i // 2 + 1}"] = x
        pooled = x.mean(dim=(2, 3))
        acts["average pooling"] = pooled
        probs = torch.softmax(self.head(pooled), dim=1)
        acts["logits"] = probs
        return probs, acts


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def init_constant_output(gen: Generator, value: float = 0.0) -> Generator:
    """Zero every weight so the network outputs ``value`` everywhere.

    With all convolution weights and biases at zero, every hidden feature
    map is zero through normalization, ReLU, and skip concatenation; the
    final bias then sets the output level. Useful as an identity-like
    starting point on constant images.
    """
    with torch.no_grad():
        for p in gen.parameters():
            p.zero_()
        gen.final.bias.fill_(value)
    return gen
