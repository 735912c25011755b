import math
import warnings

import pytest
import torch
import torch.nn as nn

from sdrnet.errors import ConfigError, DataError, ShapeError
from sdrnet.model import (
    BasicBlock,
    Bottleneck,
    DilatedResidualBlock,
    ModelConfig,
    SpatialAttention,
    build_model,
    forward,
    load_checkpoint,
    save_checkpoint,
    summarize,
)
from sdrnet.dilation import DilationSchedule, receptive_field


def small(**kw):
    kw.setdefault("base_width", 8)
    kw.setdefault("input_size", 64)
    return ModelConfig(**kw)


def test_default_forward_shapes():
    model = build_model(ModelConfig(), seed=0).eval()
    with torch.no_grad():
        main, inter = forward(model, torch.randn(1, 3, 256, 256))
    assert main.shape == (1, 6, 256, 256)
    assert inter.shape == (1, 6, 256, 256)


@pytest.mark.parametrize("size", [32, 64, 96])
def test_shape_contract_any_multiple_of_32(size):
    model = build_model(small(), seed=0).eval()
    with torch.no_grad():
        main, inter = model(torch.randn(2, 3, size, size))
    assert main.shape == inter.shape == (2, 6, size, size)


def test_single_plain_network_has_one_head():
    model = build_model(small(stacked=False, use_drb=False, use_attention=False), seed=0)
    names = [n for n, _ in model.stages()]
    assert "head_inter" not in names and not any(n.startswith(("enc2", "att", "drb")) for n in names)
    main, inter = model(torch.randn(1, 3, 64, 64))
    assert inter is None and main.shape == (1, 6, 64, 64)


def test_stage_names():
    names = [n for n, _ in build_model(small(), seed=0).stages()]
    expected = (
        [f"enc1.block{i}" for i in range(1, 6)]
        + ["att1.3", "att1.4", "att1.5", "drb1"]
        + [f"dec1.block{i}" for i in range(1, 6)]
        + ["head_inter"]
        + [f"enc2.block{i}" for i in range(1, 5)]
        + ["att2.2", "att2.3", "att2.4", "drb2"]
        + [f"dec2.block{i}" for i in range(1, 5)]
        + ["head_main"]
    )
    assert names == expected


def test_stages_partition_parameters():
    model = build_model(small(), seed=0)
    staged = [id(p) for ps in model.stage_parameters().values() for p in ps]
    assert sorted(staged) == sorted(id(p) for p in model.parameters())


def test_bad_spatial_dims():
    model = build_model(small(), seed=0)
    with pytest.raises(ShapeError):
        model(torch.randn(1, 3, 48, 64))


def test_nan_input_flagged():
    model = build_model(small(), seed=0).eval()
    x = torch.randn(1, 3, 64, 64)
    x[0, 0, 3, 3] = float("nan")
    with pytest.raises(DataError):
        model(x)


def test_zero_weight_model_outputs_zero():
    model = build_model(small(), seed=0).eval()
    with torch.no_grad():
        for p in model.parameters():
            p.zero_()
        main, inter = model(torch.randn(1, 3, 64, 64))
    assert torch.count_nonzero(main) == 0 and torch.count_nonzero(inter) == 0


@pytest.mark.parametrize(
    "kw",
    [{"num_classes": 1}, {"input_size": 48}, {"backbone": "vgg"}, {"attention_kernel": 4}, {"drb_rates": ()}],
)
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        ModelConfig(**kw)


def test_gridding_schedule_refused_unless_allowed():
    with pytest.raises(ConfigError, match="grids"):
        build_model(small(drb_rates=(2, 4, 8)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        build_model(small(drb_rates=(2, 4, 8), allow_gridding=True))
    assert any("grids" in str(w.message) for w in caught)


def test_pretrained_requires_path():
    with pytest.raises(ConfigError):
        build_model(small(pretrained_encoder1=True))


def test_pretrained_encoder_loads_local_file(tmp_path):
    donor = build_model(small(), seed=1)
    path = tmp_path / "enc.pt"
    torch.save(donor.sub1.encoder.state_dict(), path)
    model = build_model(small(pretrained_encoder1=True, pretrained_path=str(path)), seed=2)
    for a, b in zip(model.sub1.encoder.parameters(), donor.sub1.encoder.parameters()):
        assert torch.equal(a, b)
    assert not torch.equal(
        next(model.sub2.encoder.parameters()), next(donor.sub2.encoder.parameters())
    )


# -- spatial attention -------------------------------------------------------


def test_attention_zero_conv_halves_input():
    att = SpatialAttention(7)
    nn.init.zeros_(att.conv.weight)
    nn.init.zeros_(att.conv.bias)
    x = torch.full((1, 4, 8, 8), 3.0)
    assert torch.equal(att(x), 0.5 * x)
    x = torch.randn(2, 5, 9, 9)
    assert torch.equal(att(x), 0.5 * x)


def test_attention_hand_evaluated_gate():
    att = SpatialAttention(1)
    with torch.no_grad():
        att.conv.weight.fill_(1.0)
        att.conv.bias.zero_()
    x = torch.tensor([1.0, 3.0]).view(1, 2, 1, 1)
    gate = att.gate(x)
    assert gate.item() == pytest.approx(1 / (1 + math.exp(-5.0)), abs=1e-7)
    assert gate.item() == pytest.approx(0.9933, abs=5e-5)


def test_attention_gate_range():
    torch.manual_seed(0)
    att = SpatialAttention(7)
    x = torch.randn(3, 6, 16, 16)
    gate = att.gate(x)
    assert (gate > 0).all() and (gate < 1).all()
    assert (att(x).abs() <= x.abs()).all()


# -- residual blocks and DRB -------------------------------------------------


@pytest.mark.parametrize("block,ch", [(BasicBlock, 8), (Bottleneck, 8)])
def test_residual_block_zero_branch_is_identity(block, ch):
    blk = block(ch * block.expansion, ch)
    nn.init.zeros_(blk.last_conv.weight)
    x = torch.randn(2, ch * block.expansion, 6, 6)
    assert torch.equal(blk(x), x)


@pytest.mark.parametrize("rates", [(1,), (1, 2, 5), (1, 2, 3), (1, 3, 9)])
def test_drb_preserves_resolution(rates):
    drb = DilatedResidualBlock(16, rates)
    x = torch.randn(1, 16, 32, 32)
    assert drb(x).shape == x.shape


def test_drb_zero_projection_is_identity():
    drb = DilatedResidualBlock(8, (1,), reduction=1).eval()
    nn.init.zeros_(drb.project[0].weight)
    x = torch.randn(1, 8, 10, 10)
    assert torch.equal(drb(x), x)


def test_drb_sum_fusion():
    drb = DilatedResidualBlock(8, (1, 2, 5), fusion="sum")
    assert drb(torch.randn(1, 8, 16, 16)).shape == (1, 8, 16, 16)


def _influence_extent(module, size, channels):
    """Edge length of the input region influencing the centre output pixel."""
    x = torch.randn(1, channels, size, size, requires_grad=True)
    c = size // 2
    module(x)[0, :, c, c].sum().backward()
    rows = torch.nonzero(x.grad.abs().sum(dim=(0, 1, 3)))
    return int(rows.max() - rows.min() + 1)


def test_drb_receptive_field_matches_analysis():
    drb = DilatedResidualBlock(4, (1, 2, 5), reduction=1).eval()
    assert _influence_extent(drb, 41, 4) == receptive_field(DilationSchedule((1, 2, 5), 3)) == 17


# -- summary ---------------------------------------------------------------


def test_single_conv_counts():
    conv = nn.Conv2d(3, 8, 3, padding=1, bias=True)
    s = summarize(conv, input_size=256, in_channels=3)
    assert s.parameter_count == 224
    assert s.parameter_bytes == 224 * 4
    assert s.macs == 3 * 3 * 3 * 8 * 256 * 256 == 14_155_776
    assert s.flops_estimate == 2 * 14_155_776


def test_summary_totals_are_stage_sums():
    model = build_model(small(), seed=0)
    s = summarize(model)
    assert s.parameter_count == sum(p for _, p, _ in s.per_stage_breakdown)
    assert s.parameter_count == sum(p.numel() for p in model.parameters())
    assert s.flops_estimate == sum(f for _, _, f in s.per_stage_breakdown)
    assert "total" in s.table()


@pytest.mark.parametrize(
    "ablation", [{"backbone": "resnet18"}, {"use_attention": False}, {"use_drb": False}, {"stacked": False}]
)
def test_ablations_reduce_parameters(ablation):
    full = summarize(build_model(small(), seed=0))
    cut = summarize(build_model(small(**ablation), seed=0))
    assert cut.parameter_count < full.parameter_count
    assert cut.flops_estimate <= full.flops_estimate


def test_transposed_upsampling_option():
    model = build_model(small(upsample="transposed"), seed=0)
    main, _ = model(torch.randn(1, 3, 64, 64))
    assert main.shape == (1, 6, 64, 64)


# -- determinism / checkpoint ------------------------------------------------


def test_eval_forward_is_bitwise_deterministic():
    model = build_model(small(), seed=0).eval()
    x = torch.randn(2, 3, 64, 64)
    with torch.no_grad():
        a = model(x)
        b = model(x)
    assert torch.equal(a[0], b[0]) and torch.equal(a[1], b[1])


def test_seeded_build_is_reproducible():
    a = build_model(small(), seed=3)
    b = build_model(small(), seed=3)
    for p, q in zip(a.parameters(), b.parameters()):
        assert torch.equal(p, q)


def test_checkpoint_round_trip(tmp_path):
    model = build_model(small(backbone="resnet18", num_classes=4), seed=0)
    path = save_checkpoint(tmp_path / "m.npz", model, meta={"seed": 0})
    loaded, meta = load_checkpoint(path)
    assert meta == {"seed": 0}
    assert loaded.config == model.config
    for (k, v), (k2, v2) in zip(model.state_dict().items(), loaded.state_dict().items()):
        assert k == k2 and torch.equal(v, v2)
    assert not list(tmp_path.glob("*.tmp"))


def test_checkpoint_rejects_foreign_file(tmp_path):
    import numpy as np

    p = tmp_path / "x.npz"
    np.savez(p, a=np.zeros(3))
    with pytest.raises(DataError):
        load_checkpoint(p)
