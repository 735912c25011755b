import hashlib
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from sdrnet.cli import main
from sdrnet.errors import ConfigError
from sdrnet.evaluation import parse_report_csv
from sdrnet.runconfig import parse_run_config


def digest(folder):
    h = hashlib.sha256()
    for p in sorted(Path(folder).rglob("*")):
        if p.is_file():
            h.update(p.relative_to(folder).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


@pytest.mark.parametrize("rates,code", [("1,2,5", 0), ("2,4,8", 2), ("1,2,3", 0), ("2,2,2", 2)])
def test_analyze_exit_codes(rates, code, capsys):
    assert main(["analyze-dilations", "--rates", rates, "--kernel", "3"]) == code
    out = capsys.readouterr().out
    assert out.splitlines()[0] == f"rates: {rates}"


def test_analyze_usage_errors(capsys):
    assert main(["analyze-dilations"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main(["analyze-dilations", "--rates", "1,0"]) == 1
    assert main(["no-such-command"]) == 1


def test_analyze_renders(tmp_path, capsys):
    png = tmp_path / "fp.png"
    assert main(["analyze-dilations", "--rates", "1,2", "--render", str(png), "--render-ascii"]) == 0
    assert png.exists()
    assert "#" in capsys.readouterr().out


@pytest.mark.parametrize("cmd", ["analyze-dilations", "tile", "synth", "train", "eval", "predict", "model-summary"])
def test_every_subcommand_has_help(cmd, capsys):
    assert main([cmd, "--help"]) == 0
    assert "usage" in capsys.readouterr().out


def test_synth_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["synth", "--count", "8", "--size", "64", "--seed", "7", "--out", str(tmp_path / name)]) == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    with Image.open(tmp_path / "a" / "images" / "synth0000.png") as im:
        assert im.text["seed"] == "7"
    assert (tmp_path / "a" / "manifest.txt").read_text().startswith("# seed=7\n")


def test_tile_writes_windows(tmp_path):
    main(["synth", "--count", "1", "--size", "96", "--out", str(tmp_path / "s")])
    img = tmp_path / "s" / "images" / "synth0000.png"
    mask = tmp_path / "s" / "masks" / "synth0000.png"
    assert main(["tile", "--image", str(img), "--mask", str(mask), "--tile", "64", "--out", str(tmp_path / "t")]) == 0
    names = sorted(p.name for p in (tmp_path / "t" / "images").iterdir())
    assert names == ["synth0000_0_0.png", "synth0000_0_32.png", "synth0000_32_0.png", "synth0000_32_32.png"]
    assert len(list((tmp_path / "t" / "masks").iterdir())) == 4


def test_tile_missing_image_is_runtime_error(tmp_path):
    assert main(["tile", "--image", str(tmp_path / "nope.png"), "--out", str(tmp_path / "t")]) == 3


def test_summary_prints_parameters(capsys):
    assert main(["model-summary", "--input-size", "64", "--json"]) == 0
    import json

    data = json.loads(capsys.readouterr().out)
    assert data["parameter_count"] > 0


def test_run_config_parsing(tmp_path):
    run = parse_run_config("[model]\nbase_width = 8\ndrb_rates = 1, 2, 3\nstacked = no\n[loss]\nclass_weights = 1,1,1,1,1,2\n")
    assert run.model.base_width == 8 and run.model.drb_rates == (1, 2, 3) and run.model.stacked is False
    assert run.loss.class_weights == (1.0, 1.0, 1.0, 1.0, 1.0, 2.0)
    with pytest.raises(ConfigError):
        parse_run_config("[model]\nwidth = 8\n")
    with pytest.raises(ConfigError):
        parse_run_config("[optimizer]\nlr = 1\n")
    with pytest.raises(ConfigError):
        parse_run_config("[train]\nmax_iter = lots\n")
    with pytest.raises(ConfigError):
        parse_run_config("[model]\ninput_size = 50\n")
    with pytest.raises(ConfigError):
        parse_run_config("[loss]\nclass_weights = 1, 2\n")


def test_train_rejects_bad_config(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[model]\nmystery = 1\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 1
    cfg.write_text("[model]\ndrb_rates = 2, 4, 8\n[data]\nmanifest = x\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 1


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--count", "2", "--size", "64", "--seed", "1", "--out", str(root / "synth")]) == 0
    cfg = root / "run.ini"
    cfg.write_text("[model]\nbase_width = 4\ninput_size = 32\n[train]\nbatch_size = 2\nseed = 4\n"
                   "[data]\nmanifest = synth/manifest.txt\nval_split = val\n")
    assert main(["train", "--config", str(cfg), "--max-iter", "5", "--out", str(root / "run")]) == 0
    return root


def test_train_log_rows(trained):
    lines = (trained / "run" / "train_log.csv").read_text().splitlines()
    assert lines[0] == "# seed=4"
    assert len(lines) == 2 + 5
    assert (trained / "run" / "checkpoint.npz").exists()


def test_eval_outputs(trained, capsys):
    out, csv_path = trained / "report.txt", trained / "report.csv"
    args = ["eval", "--checkpoint", str(trained / "run" / "checkpoint.npz"),
            "--manifest", str(trained / "synth" / "manifest.txt"), "--out", str(out), "--csv", str(csv_path)]
    assert main(args) == 0
    assert "seed=4" in out.read_text().splitlines()[0]
    parsed = parse_report_csv(csv_path.read_text())
    assert 0.0 <= parsed["oa"] <= 1.0
    assert main(args + ["--classes", "5"]) == 1


def test_predict_outputs(trained):
    img = trained / "synth" / "images" / "synth0000.png"
    ckpt = str(trained / "run" / "checkpoint.npz")
    outs = []
    for i in range(2):
        color, index = trained / f"pred{i}.png", trained / f"idx{i}.png"
        assert main(["predict", "--checkpoint", ckpt, "--image", str(img), "--out", str(color),
                     "--index-out", str(index), "--stride", "16"]) == 0
        with Image.open(color) as im:
            assert im.size == (64, 64) and im.mode == "RGB"
            assert im.text["seed"] == "4"
        outs.append(np.asarray(Image.open(index)))
    assert np.array_equal(outs[0], outs[1])
    assert outs[0].max() < 6


def test_predict_missing_checkpoint(tmp_path):
    assert main(["predict", "--checkpoint", str(tmp_path / "x.npz"), "--image", "y.png", "--out", "z.png"]) == 3
