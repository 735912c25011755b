"""Parameter and compute budget of the stacked network and its ablations."""

import torch

from sdrnet.model import ModelConfig, build_model, summarize

configs = {
    "default (resnet50-style)": ModelConfig(),
    "resnet18-style": ModelConfig(backbone="resnet18"),
    "no attention": ModelConfig(use_attention=False),
    "no dilated block": ModelConfig(use_drb=False),
    "single network": ModelConfig(stacked=False),
}

for name, cfg in configs.items():
    s = summarize(build_model(cfg, seed=0), 256)
    print(f"{name:<26} {s.parameter_count / 1e6:7.2f}M params  {s.flops_estimate / 1e9:6.1f} GFLOPs")

# per-stage breakdown of the default model
print()
print(summarize(build_model(ModelConfig(), seed=0), 256).table())

# a width-reduced copy for desk experiments; both heads keep the input size
small = build_model(ModelConfig(base_width=8, input_size=64), seed=0).eval()
with torch.no_grad():
    main, inter = small(torch.randn(2, 3, 64, 64))
print("main", tuple(main.shape), "intermediate", tuple(inter.shape))
