import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ShapeError


def conv_bn_relu(in_ch, out_ch, kernel=3, stride=1, dilation=1):
    pad = dilation * (kernel - 1) // 2
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, kernel, stride=stride, padding=pad, dilation=dilation, bias=False),
        nn.BatchNorm2d(out_ch),
        nn.ReLU(inplace=True),
    )


class BasicBlock(nn.Module):
    """Pre-activation residual block, two 3x3 convs: ``y = F(x) + x``."""

    expansion = 1

    def __init__(self, in_ch, planes, stride=1):
        super().__init__()
        out_ch = planes * self.expansion
        self.bn1 = nn.BatchNorm2d(in_ch)
        self.conv1 = nn.Conv2d(in_ch, planes, 3, stride=stride, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(planes)
        self.conv2 = nn.Conv2d(planes, out_ch, 3, padding=1, bias=False)
        self.shortcut = None
        if stride != 1 or in_ch != out_ch:
            self.shortcut = nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False)

    @property
    def last_conv(self):
        return self.conv2

    def forward(self, x):
        out = F.relu(self.bn1(x))
        skip = self.shortcut(out) if self.shortcut is not None else x
        out = self.conv1(out)
        out = self.conv2(F.relu(self.bn2(out)))
        return out + skip


class Bottleneck(nn.Module):
    """Pre-activation 1x1-3x3-1x1 residual block with 4x channel expansion."""

    expansion = 4

    def __init__(self, in_ch, planes, stride=1):
        super().__init__()
        out_ch = planes * self.expansion
        self.bn1 = nn.BatchNorm2d(in_ch)
        self.conv1 = nn.Conv2d(in_ch, planes, 1, bias=False)
        self.bn2 = nn.BatchNorm2d(planes)
        self.conv2 = nn.Conv2d(planes, planes, 3, stride=stride, padding=1, bias=False)
        self.bn3 = nn.BatchNorm2d(planes)
        self.conv3 = nn.Conv2d(planes, out_ch, 1, bias=False)
        self.shortcut = None
        if stride != 1 or in_ch != out_ch:
            self.shortcut = nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False)

    @property
    def last_conv(self):
        return self.conv3

    def forward(self, x):
        out = F.relu(self.bn1(x))
        skip = self.shortcut(out) if self.shortcut is not None else x
        out = self.conv1(out)
        out = self.conv2(F.relu(self.bn2(out)))
        out = self.conv3(F.relu(self.bn3(out)))
        return out + skip


BLOCKS = {"basic": BasicBlock, "bottleneck": Bottleneck}


def residual_stage(block, in_ch, planes, n_blocks, stride):
    layers = [block(in_ch, planes, stride)]
    for _ in range(1, n_blocks):
        layers.append(block(planes * block.expansion, planes))
    return nn.Sequential(*layers)


class SpatialAttention(nn.Module):
    """Spatial gate: sigmoid(conv([mean_c(F); max_c(F)])) broadcast over channels."""

    def __init__(self, kernel=7):
        super().__init__()
        if kernel % 2 == 0:
            raise ValueError("attention kernel must be odd")
        self.conv = nn.Conv2d(2, 1, kernel, padding=kernel // 2, bias=True)

    def gate(self, x):
        avg = x.mean(dim=1, keepdim=True)
        mx = x.amax(dim=1, keepdim=True)
        return torch.sigmoid(self.conv(torch.cat([avg, mx], dim=1)))

    def forward(self, x):
        return x * self.gate(x)


class DilatedResidualBlock(nn.Module):
    """Serial dilated convs with per-layer skips and a fused output.

    Layer ``i`` computes ``y_i = relu(bn(conv_{r_i}(y_{i-1}))) + y_{i-1}``.
    All ``y_i`` are fused (concatenation or sum) and projected back to
    ``channels`` by a 1x1 conv; the block input is added on top.
    """

    def __init__(self, channels, rates=(1, 2, 5), kernel=3, reduction=4, fusion="concat"):
        super().__init__()
        self.rates = tuple(rates)
        self.kernel = kernel
        self.fusion = fusion
        mid = max(channels // reduction, 1)
        self.reduce = conv_bn_relu(channels, mid, kernel=1) if mid != channels else nn.Identity()
        self.layers = nn.ModuleList(conv_bn_relu(mid, mid, kernel, dilation=r) for r in self.rates)
        fused_ch = mid * len(self.rates) if fusion == "concat" else mid
        self.project = nn.Sequential(nn.Conv2d(fused_ch, channels, 1, bias=False), nn.BatchNorm2d(channels))

    def forward(self, x):
        y = self.reduce(x)
        outs = []
        for layer in self.layers:
            y = layer(y) + y
            outs.append(y)
        if self.fusion == "concat":
            fused = torch.cat(outs, dim=1)
        else:
            fused = torch.stack(outs).sum(0)
        fused = self.project(fused)
        if fused.shape != x.shape:
            raise ShapeError(f"DRB fusion produced {tuple(fused.shape)}, expected {tuple(x.shape)}")
        return x + fused


class DecoderBlock(nn.Module):
    """x2 upsample, concatenate the skip tensor, two 3x3 conv-bn-relu."""

    def __init__(self, in_ch, skip_ch, out_ch, upsample="bilinear"):
        super().__init__()
        self.mode = upsample
        if upsample == "transposed":
            self.up = nn.ConvTranspose2d(in_ch, in_ch, 2, stride=2)
        self.convs = nn.Sequential(conv_bn_relu(in_ch + skip_ch, out_ch), conv_bn_relu(out_ch, out_ch))

    def forward(self, x, skip=None):
        if self.mode == "transposed":
            x = self.up(x)
        else:
            x = F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)
        if skip is not None:
            if skip.shape[-2:] != x.shape[-2:]:
                raise ShapeError(f"skip {tuple(skip.shape[-2:])} does not match {tuple(x.shape[-2:])}")
            x = torch.cat([x, skip], dim=1)
        return self.convs(x)
