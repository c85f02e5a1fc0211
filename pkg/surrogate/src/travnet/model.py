"""Surrogate network: shared convolutional trunk, three sigmoid heads.

Two trunk options: a compact 4-block stack (the desk-scale default) and
a small residual variant. Both end in global average pooling; each
failure event gets its own head with one 512-unit hidden layer, so the
heads can be trained alone while the trunk stays frozen.
"""

from __future__ import annotations

import torch
from torch import nn

EVENTS = ("step", "obstacle", "tilt")
HEAD_HIDDEN = 512


def _norm(channels: int) -> nn.GroupNorm:
    # Group normalization: stable at small batch sizes and free of
    # train/eval statistics drift, which matters for threshold-sensitive
    # probability outputs.
    return nn.GroupNorm(min(8, channels), channels)


def _conv_block(c_in: int, c_out: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, kernel_size=3, stride=2, padding=1, bias=False),
        _norm(c_out),
        nn.ReLU(inplace=True),
    )


class CompactTrunk(nn.Module):
    """Four stride-2 conv blocks: 129x129x4 -> 128 features.

    Failure cues are existential (one small violation anywhere along the
    path flips the label), so the spatial grid is reduced with both mean
    and max pooling; the max half preserves localized evidence that
    averaging would wash out.
    """

    out_features = 128

    def __init__(self):
        super().__init__()
        self.blocks = nn.Sequential(
            _conv_block(4, 8),
            _conv_block(8, 16),
            _conv_block(16, 32),
            _conv_block(32, 64),
        )
        self.avg = nn.AdaptiveAvgPool2d(1)
        self.max = nn.AdaptiveMaxPool2d(1)

    def forward(self, x):
        z = self.blocks(x)
        return torch.cat([self.avg(z).flatten(1), self.max(z).flatten(1)], dim=1)


class _ResidualBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, stride: int):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, stride=stride, padding=1, bias=False)
        self.bn1 = _norm(c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, padding=1, bias=False)
        self.bn2 = _norm(c_out)
        self.relu = nn.ReLU(inplace=True)
        if stride != 1 or c_in != c_out:
            self.skip = nn.Sequential(
                nn.Conv2d(c_in, c_out, 1, stride=stride, bias=False),
                _norm(c_out),
            )
        else:
            self.skip = nn.Identity()

    def forward(self, x):
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.relu(out + self.skip(x))


class ResidualTrunk(nn.Module):
    """Three two-block residual stages; heavier than the compact trunk."""

    out_features = 192

    def __init__(self):
        super().__init__()
        self.stem = _conv_block(4, 16)
        self.stages = nn.Sequential(
            _ResidualBlock(16, 24, stride=2), _ResidualBlock(24, 24, stride=1),
            _ResidualBlock(24, 48, stride=2), _ResidualBlock(48, 48, stride=1),
            _ResidualBlock(48, 96, stride=2), _ResidualBlock(96, 96, stride=1),
        )
        self.avg = nn.AdaptiveAvgPool2d(1)
        self.max = nn.AdaptiveMaxPool2d(1)

    def forward(self, x):
        z = self.stages(self.stem(x))
        return torch.cat([self.avg(z).flatten(1), self.max(z).flatten(1)], dim=1)


class SurrogateNet(nn.Module):
    """Trunk + three independent event heads emitting failure probabilities.

    Inputs are standardized per channel with statistics fixed at training
    time (stored as buffers, so they travel with the checkpoint). The
    elevation channel varies a few percent around 0.5 while the footprint
    channels span the full unit range; without rescaling, the small
    elevation deviations that decide most labels are nearly invisible to
    the first convolution.
    """

    def __init__(self, backbone: str = "compact", dropout: float = 0.2):
        super().__init__()
        if backbone == "compact":
            self.trunk = CompactTrunk()
        elif backbone == "resnet-style":
            self.trunk = ResidualTrunk()
        else:
            raise ValueError(f"unknown backbone {backbone!r}")
        self.register_buffer("input_mean", torch.zeros(1, 3, 1, 1))
        self.register_buffer("input_scale", torch.ones(1, 3, 1, 1))
        feats = self.trunk.out_features
        self.heads = nn.ModuleDict({
            name: nn.Sequential(
                nn.Linear(feats, HEAD_HIDDEN),
                nn.ReLU(inplace=True),
                nn.Dropout(dropout),
                nn.Linear(HEAD_HIDDEN, 1),
            )
            for name in EVENTS
        })

    def set_input_stats(self, mean, std) -> None:
        """Freeze per-channel standardization constants."""
        mean = torch.as_tensor(mean, dtype=torch.float32).reshape(1, 3, 1, 1)
        std = torch.as_tensor(std, dtype=torch.float32).reshape(1, 3, 1, 1)
        self.input_mean.copy_(mean)
        self.input_scale.copy_(1.0 / torch.clamp(std, min=1e-4))

    @staticmethod
    def _derived_channel(x):
        """High-passed elevation: height over the local 9x9 mean.

        The obstacle and step events are defined by local excursions over
        the surrounding trend, so the residual is handed to the trunk as
        a fourth channel instead of being rediscovered from scratch.
        """
        elev = x[:, :1]
        local = torch.nn.functional.avg_pool2d(elev, kernel_size=9, stride=1,
                                               padding=4, count_include_pad=False)
        return elev - local

    def forward(self, x):
        """Probabilities per event, shape (batch, 3), in [0, 1]."""
        residual = self._derived_channel(x) * 20.0
        x = (x - self.input_mean) * self.input_scale
        z = self.trunk(torch.cat([x, residual], dim=1))
        logits = torch.cat([self.heads[name](z) for name in EVENTS], dim=1)
        return torch.sigmoid(logits)

    def head_parameters(self):
        return [p for head in self.heads.values() for p in head.parameters()]
