from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import List, Tuple

import torch
import torch.nn as nn

BYTES_PER_PARAM = 4


@dataclass
class ModelSummary:
    parameter_count: int
    parameter_bytes: int
    flops_estimate: int
    input_size: int
    per_stage_breakdown: List[Tuple[str, int, int]] = field(default_factory=list)

    @property
    def macs(self):
        return self.flops_estimate // 2

    def table(self):
        rows = [("stage", "params", "GFLOPs")]
        rows += [(n, f"{p:,}", f"{f / 1e9:.4f}") for n, p, f in self.per_stage_breakdown]
        rows.append(("total", f"{self.parameter_count:,}", f"{self.flops_estimate / 1e9:.4f}"))
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        lines = [f"{r[0]:<{widths[0]}}  {r[1]:>{widths[1]}}  {r[2]:>{widths[2]}}" for r in rows]
        lines.insert(1, "-" * len(lines[0]))
        lines.insert(len(lines) - 1, "-" * len(lines[0]))
        lines.append(f"parameter bytes (fp32): {self.parameter_bytes:,} ({self.parameter_bytes / 2**20:.2f} MiB)")
        lines.append(f"input size: {self.input_size}x{self.input_size}")
        return "\n".join(lines)

    def to_json(self):
        d = asdict(self)
        d["per_stage_breakdown"] = [
            {"stage": n, "params": p, "flops": f} for n, p, f in self.per_stage_breakdown
        ]
        return json.dumps(d, indent=2)


def conv_macs(module, inp, out):
    if isinstance(module, nn.ConvTranspose2d):
        kh, kw = module.kernel_size
        x = inp[0]
        return x.shape[0] * x.shape[1] * x.shape[2] * x.shape[3] * (module.out_channels // module.groups) * kh * kw
    if isinstance(module, nn.Conv2d):
        kh, kw = module.kernel_size
        n, c_out, h, w = out.shape
        return n * c_out * h * w * (module.in_channels // module.groups) * kh * kw
    if isinstance(module, nn.Linear):
        return out.numel() * module.in_features
    return 0


def _stages(model):
    if hasattr(model, "stages"):
        return model.stages()
    children = list(model.named_children())
    return children or [("model", model)]


def summarize(model: nn.Module, input_size=None, in_channels=None) -> ModelSummary:
    """Exact parameter count and analytic FLOPs (2 x MACs) per stage.

    MACs are counted for convolutions and linear layers from the shapes seen
    in one batch-1 forward pass; normalisation, activations and pooling are
    not counted.
    """
    cfg = getattr(model, "config", None)
    if input_size is None:
        input_size = cfg.input_size if cfg is not None else 32
    if in_channels is None:
        in_channels = cfg.in_channels if cfg is not None else _first_in_channels(model)

    stages = _stages(model)
    owner = {}
    for name, mod in stages:
        for sub in mod.modules():
            owner.setdefault(id(sub), name)
    macs = {name: 0 for name, _ in stages}

    def hook(mod, inp, out):
        macs[owner[id(mod)]] += conv_macs(mod, inp, out)

    handles = [
        m.register_forward_hook(hook)
        for _, mod in stages
        for m in mod.modules()
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear))
    ]
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            model(torch.zeros(1, in_channels, input_size, input_size))
    finally:
        for h in handles:
            h.remove()
        model.train(was_training)

    breakdown = []
    for name, mod in stages:
        params = sum(p.numel() for p in mod.parameters())
        breakdown.append((name, params, 2 * macs[name]))
    total_params = sum(p for _, p, _ in breakdown)
    return ModelSummary(
        parameter_count=total_params,
        parameter_bytes=total_params * BYTES_PER_PARAM,
        flops_estimate=sum(f for _, _, f in breakdown),
        input_size=input_size,
        per_stage_breakdown=breakdown,
    )


def _first_in_channels(model):
    for m in model.modules():
        if isinstance(m, nn.Conv2d):
            return m.in_channels
    return 3
