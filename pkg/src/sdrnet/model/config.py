from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from ..dilation import DilationSchedule
from ..errors import ConfigError

BACKBONES = {
    # name: (block kind, blocks per residual stage)
    "resnet50": ("bottleneck", (3, 4, 6, 3)),
    "resnet18": ("basic", (2, 2, 2, 2)),
}


def _backbone_key(name):
    key = str(name).lower().replace("-style", "").replace("_", "")
    if key not in BACKBONES:
        raise ConfigError(f"backbone must be one of {sorted(BACKBONES)} (got {name!r})")
    return key


@dataclass
class ModelConfig:
    """Declarative description of the stacked network.

    ``base_width`` is the stem channel count; residual stages use
    ``base_width * 2**i`` planes. 64 gives the standard ResNet widths,
    smaller values shrink every layer uniformly for desk-scale runs.
    """

    num_classes: int = 6
    in_channels: int = 3
    input_size: int = 256
    backbone: str = "resnet50"
    pretrained_encoder1: bool = False
    pretrained_encoder2: bool = False
    pretrained_path: Optional[str] = None
    use_attention: bool = True
    use_drb: bool = True
    stacked: bool = True
    drb_rates: tuple = (1, 2, 5)
    drb_kernel: int = 3
    drb_fusion: str = "concat"
    drb_reduction: int = 4
    allow_gridding: bool = False
    attention_kernel: int = 7
    upsample: str = "bilinear"
    base_width: int = 64

    def __post_init__(self):
        self.drb_rates = tuple(int(r) for r in self.drb_rates)
        self.validate()

    @property
    def drb_schedule(self):
        return DilationSchedule(self.drb_rates, self.drb_kernel)

    @property
    def backbone_key(self):
        return _backbone_key(self.backbone)

    def validate(self):
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2 (got {self.num_classes})")
        if self.in_channels < 1:
            raise ConfigError(f"in_channels must be >= 1 (got {self.in_channels})")
        if self.input_size < 32 or self.input_size % 32:
            raise ConfigError(f"input_size must be a positive multiple of 32 (got {self.input_size})")
        if self.base_width < 1:
            raise ConfigError(f"base_width must be >= 1 (got {self.base_width})")
        if self.attention_kernel < 1 or self.attention_kernel % 2 == 0:
            raise ConfigError(f"attention_kernel must be odd (got {self.attention_kernel})")
        if self.drb_fusion not in ("concat", "sum"):
            raise ConfigError(f"drb_fusion must be 'concat' or 'sum' (got {self.drb_fusion!r})")
        if self.drb_reduction < 1:
            raise ConfigError("drb_reduction must be >= 1")
        if self.upsample not in ("bilinear", "transposed"):
            raise ConfigError(f"upsample must be 'bilinear' or 'transposed' (got {self.upsample!r})")
        _backbone_key(self.backbone)
        try:
            self.drb_schedule
        except ValueError as exc:
            raise ConfigError(f"drb schedule: {exc}") from exc

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["drb_rates"] = list(self.drb_rates)
        return d

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)
