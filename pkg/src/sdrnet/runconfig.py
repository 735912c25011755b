"""Run configuration files for the ``train`` and ``model-summary`` commands.

Plain ``key = value`` lines grouped into sections::

    [model]
    base_width = 16
    input_size = 64
    drb_rates = 1, 2, 5

    [train]
    max_iter = 300
    batch_size = 4
    seed = 0

    [loss]
    beta = 0.4

    [data]
    manifest = synth/manifest.txt
    split = train
    augment = none

``[model]``, ``[train]`` and ``[loss]`` accept the fields of
:class:`ModelConfig`, :class:`TrainConfig` and :class:`LossConfig`.
``[data]`` accepts ``manifest``, ``split``, ``val_split`` and ``augment``
(``none``, ``default`` or a policy file path). Relative paths resolve
against the config file's directory. Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .model.config import ModelConfig
from .training import LossConfig, TrainConfig


@dataclass
class DataConfig:
    manifest: Optional[str] = None
    split: str = "train"
    val_split: Optional[str] = None
    augment: str = "none"


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    data: DataConfig = field(default_factory=DataConfig)

    @property
    def seed(self):
        return self.train.seed

    def dumps(self):
        out = []
        for name in ("model", "train", "loss", "data"):
            out.append(f"[{name}]")
            for k, v in dataclasses.asdict(getattr(self, name)).items():
                if v is None:
                    continue
                if isinstance(v, (list, tuple)):
                    v = ", ".join(str(x) for x in v)
                out.append(f"{k} = {v}")
            out.append("")
        return "\n".join(out)


def _coerce(section, key, raw, default):
    text = raw.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(f"not a boolean: {text!r}")
            return low in ("true", "yes", "1", "on")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple) or key in ("class_weights",):
            if text.lower() in ("", "none"):
                return None
            conv = int if isinstance(default, tuple) else float
            return tuple(conv(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc
    if text.lower() == "none":
        return None
    return text


def _section(parser, name, cls):
    if not parser.has_section(name):
        return {}
    defaults = {f.name: (f.default if f.default is not dataclasses.MISSING else f.default_factory())
                for f in dataclasses.fields(cls)}
    out = {}
    for key, raw in parser.items(name):
        if key not in defaults:
            raise ConfigError(f"[{name}] unknown key {key!r}; expected one of {', '.join(sorted(defaults))}")
        out[key] = _coerce(name, key, raw, defaults[key])
    return out


def parse_run_config(text, base_dir=None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    unknown = set(parser.sections()) - {"model", "train", "loss", "data"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    try:
        model = ModelConfig(**_section(parser, "model", ModelConfig))
        train = TrainConfig(**_section(parser, "train", TrainConfig))
        loss = LossConfig(**_section(parser, "loss", LossConfig))
        data = DataConfig(**_section(parser, "data", DataConfig))
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if loss.class_weights is not None and len(loss.class_weights) != model.num_classes:
        raise ConfigError(f"{len(loss.class_weights)} class weights for {model.num_classes} classes")
    if base_dir is not None:
        if data.manifest and not Path(data.manifest).is_absolute():
            data.manifest = str(Path(base_dir) / data.manifest)
        if data.augment not in ("none", "default") and not Path(data.augment).is_absolute():
            data.augment = str(Path(base_dir) / data.augment)
        if model.pretrained_path and not Path(model.pretrained_path).is_absolute():
            model.pretrained_path = str(Path(base_dir) / model.pretrained_path)
    return RunConfig(model, train, loss, data)


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_run_config(text, base_dir=path.parent)
