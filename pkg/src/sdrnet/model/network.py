"""The stacked encoder-decoder network.

Stage names (used for parameter/FLOP breakdowns and gradient checks)::

    enc1.block1..5  att1.{3,4,5}  drb1  dec1.block1..5  head_inter
    enc2.block1..4  att2.{2,3,4}  drb2  dec2.block1..4  head_main

Subnetwork 1 downsamples five times (output stride 32). Its full
resolution decoder features feed subnetwork 2, which has four stages
(output stride 16) and is wrapped in a residual connection, so
``head_main`` sees ``feat + sub2(feat)``. With ``stacked=False`` only
subnetwork 1 exists and its head is ``head_main``.
"""

from __future__ import annotations

import warnings

import torch
import torch.nn as nn

from ..dilation import check_gridding
from ..errors import ConfigError, DataError, ShapeError
from .config import BACKBONES, ModelConfig
from .layers import BLOCKS, DecoderBlock, DilatedResidualBlock, SpatialAttention, residual_stage


class Encoder(nn.Module):
    """ResNet-style encoder split into ``n_blocks`` stride-2 structural blocks.

    block1 is the 7x7 stride-2 stem, block2 a max-pool followed by the first
    residual stage, and blocks 3.. the remaining residual stages.
    """

    def __init__(self, in_ch, width, kind, depths, n_blocks):
        super().__init__()
        block = BLOCKS[kind]
        self.blocks = nn.ModuleDict()
        self.blocks["block1"] = nn.Sequential(
            nn.Conv2d(in_ch, width, 7, stride=2, padding=3, bias=False),
            nn.BatchNorm2d(width),
            nn.ReLU(inplace=True),
        )
        channels = [width]
        ch = width
        for i in range(n_blocks - 1):
            planes = width * 2**i
            stage = residual_stage(block, ch, planes, depths[i], stride=1 if i == 0 else 2)
            if i == 0:
                stage = nn.Sequential(nn.MaxPool2d(3, stride=2, padding=1), *stage)
            ch = planes * block.expansion
            if i == n_blocks - 2:
                # pre-activation stacks end un-normalised
                stage = nn.Sequential(*stage, nn.BatchNorm2d(ch), nn.ReLU(inplace=True))
            self.blocks[f"block{i + 2}"] = stage
            channels.append(ch)
        self.channels = channels

    def forward(self, x):
        feats = []
        for blk in self.blocks.values():
            x = blk(x)
            feats.append(x)
        return feats


class SubNetwork(nn.Module):
    def __init__(self, in_ch, n_blocks, att_taps, dec_widths, cfg: ModelConfig, pretrained=False):
        super().__init__()
        kind, depths = BACKBONES[cfg.backbone_key]
        w = cfg.base_width
        self.encoder = Encoder(in_ch, w, kind, depths, n_blocks)
        enc_ch = self.encoder.channels
        self.att_taps = tuple(att_taps) if cfg.use_attention else ()
        self.attention = nn.ModuleDict({str(t): SpatialAttention(cfg.attention_kernel) for t in self.att_taps})
        self.drb = None
        if cfg.use_drb:
            self.drb = DilatedResidualBlock(
                enc_ch[-1], cfg.drb_rates, cfg.drb_kernel, cfg.drb_reduction, cfg.drb_fusion
            )
        # decoder block j upsamples towards encoder block n-j; the last one
        # fuses the subnetwork input itself
        skip_ch = enc_ch[-2::-1] + [in_ch]
        self.decoder = nn.ModuleDict()
        prev = enc_ch[-1]
        for j, (sc, out) in enumerate(zip(skip_ch, dec_widths), start=1):
            self.decoder[f"block{j}"] = DecoderBlock(prev, sc, out, cfg.upsample)
            prev = out
        self.out_channels = prev
        self.pretrained = pretrained

    def _gate(self, idx, feat):
        key = str(idx)
        return self.attention[key](feat) if key in self.attention else feat

    def forward(self, x):
        feats = self.encoder(x)
        n = len(feats)
        y = self._gate(n, feats[-1])
        if self.drb is not None:
            y = self.drb(y)
        skips = [self._gate(i, feats[i - 1]) for i in range(n - 1, 0, -1)] + [x]
        for blk, skip in zip(self.decoder.values(), skips):
            y = blk(y, skip)
        return y


class SDRNet(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        w = config.base_width
        self.check_finite = True
        self.sub1 = SubNetwork(
            config.in_channels, 5, (3, 4, 5), [4 * w, 2 * w, w, w, w], config, config.pretrained_encoder1
        )
        self.sub2 = None
        self.head_inter = None
        if config.stacked:
            self.head_inter = nn.Conv2d(self.sub1.out_channels, config.num_classes, 1)
            self.sub2 = SubNetwork(
                self.sub1.out_channels, 4, (2, 3, 4), [2 * w, w, w, w], config, config.pretrained_encoder2
            )
            assert self.sub2.out_channels == self.sub1.out_channels
            self.head_main = nn.Conv2d(self.sub2.out_channels, config.num_classes, 1)
        else:
            self.head_main = nn.Conv2d(self.sub1.out_channels, config.num_classes, 1)

    def stages(self):
        """Ordered ``(name, module)`` pairs covering every parameter once."""
        out = []
        subs = [("1", self.sub1)] + ([("2", self.sub2)] if self.sub2 is not None else [])
        for tag, sub in subs:
            out += [(f"enc{tag}.{k}", m) for k, m in sub.encoder.blocks.items()]
            out += [(f"att{tag}.{k}", m) for k, m in sub.attention.items()]
            if sub.drb is not None:
                out.append((f"drb{tag}", sub.drb))
            out += [(f"dec{tag}.{k}", m) for k, m in sub.decoder.items()]
            if tag == "1" and self.head_inter is not None:
                out.append(("head_inter", self.head_inter))
        out.append(("head_main", self.head_main))
        return out

    def stage_parameters(self):
        return {name: list(m.parameters()) for name, m in self.stages()}

    def forward(self, x):
        if x.dim() != 4:
            raise ShapeError(f"expected N x C x H x W input, got shape {tuple(x.shape)}")
        h, w = x.shape[-2:]
        if h % 32 or w % 32:
            raise ShapeError(f"spatial dims {h}x{w} must be divisible by 32")
        if x.shape[1] != self.config.in_channels:
            raise ShapeError(f"expected {self.config.in_channels} input channels, got {x.shape[1]}")
        if self.check_finite and not torch.isfinite(x).all():
            raise DataError("input batch contains NaN or Inf values")
        feat = self.sub1(x)
        if self.sub2 is None:
            return self.head_main(feat), None
        inter = self.head_inter(feat)
        main = self.head_main(feat + self.sub2(feat))
        return main, inter


def load_encoder_weights(encoder: Encoder, path):
    state = torch.load(path, map_location="cpu", weights_only=True)
    missing, unexpected = encoder.load_state_dict(state, strict=False)
    return missing, unexpected


def build_model(config: ModelConfig, seed=None) -> SDRNet:
    config.validate()
    if config.use_drb:
        report = check_gridding(config.drb_schedule)
        if not report.passes:
            msg = f"DRB schedule {list(config.drb_rates)} grids (M_2={report.m2}, kernel {config.drb_kernel})"
            if not config.allow_gridding:
                raise ConfigError(msg + "; set allow_gridding to override")
            warnings.warn(msg, stacklevel=2)
    if seed is not None:
        torch.manual_seed(seed)
    model = SDRNet(config)
    if config.pretrained_path:
        if config.pretrained_encoder1:
            load_encoder_weights(model.sub1.encoder, config.pretrained_path)
        if config.pretrained_encoder2 and model.sub2 is not None:
            load_encoder_weights(model.sub2.encoder, config.pretrained_path)
    elif config.pretrained_encoder1 or config.pretrained_encoder2:
        raise ConfigError("pretrained encoder requested but no pretrained_path given")
    return model


def forward(model: SDRNet, batch: torch.Tensor):
    """Run ``model`` and return ``(main_logits, inter_logits_or_None)``."""
    return model(batch)
