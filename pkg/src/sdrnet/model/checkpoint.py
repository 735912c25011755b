"""Checkpoint container: one ``.npz`` archive holding the model config as
JSON text, free-form metadata, and every state-dict tensor by name."""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np
import torch

from ..errors import DataError
from .config import ModelConfig
from .network import build_model

FORMAT = "sdrnet-checkpoint"
VERSION = 1


def save_checkpoint(path, model, meta=None):
    arrays = {f"w/{k}": v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    arrays["__format__"] = np.array(FORMAT)
    arrays["__version__"] = np.array(VERSION)
    arrays["__config__"] = np.array(json.dumps(model.config.to_dict(), sort_keys=True))
    arrays["__meta__"] = np.array(json.dumps(meta or {}, sort_keys=True))
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, **arrays)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_checkpoint(path):
    """Return ``(config, state_dict, meta)`` without building a model."""
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    with archive:
        if "__format__" not in archive.files or str(archive["__format__"]) != FORMAT:
            raise DataError(f"{path} is not an sdrnet checkpoint")
        version = int(archive["__version__"])
        if version > VERSION:
            raise DataError(f"checkpoint version {version} is newer than supported {VERSION}")
        config = ModelConfig.from_dict(json.loads(str(archive["__config__"])))
        meta = json.loads(str(archive["__meta__"]))
        state = {k[2:]: torch.from_numpy(archive[k].copy()) for k in archive.files if k.startswith("w/")}
    return config, state, meta


def load_checkpoint(path):
    config, state, meta = read_checkpoint(path)
    model = build_model(config.replace(pretrained_encoder1=False, pretrained_encoder2=False, pretrained_path=None))
    model.load_state_dict(state)
    model.eval()
    return model, meta
