"""Tiled full-frame prediction and evaluation."""

from __future__ import annotations

import numpy as np
import torch

from .data.classmap import generic_class_map
from .data.tiling import extract, plan_tiles, stitch
from .errors import DataError
from .evaluation import ConfusionMatrix, accumulate, metrics
from .training import image_to_tensor


def choose_tile(model, height, width):
    tile = min(model.config.input_size, (min(height, width) // 32) * 32)
    if tile < 32:
        raise DataError(f"image {height}x{width} is smaller than the minimum 32x32 window")
    return tile


def predict_logits(model, image, stride=None, tile=None, batch_size=4):
    """Evaluation-mode logits (K x H x W) for one H x W x C image."""
    image = np.asarray(image)
    h, w = image.shape[:2]
    tile = tile or choose_tile(model, h, w)
    plan = plan_tiles(h, w, tile, stride or tile)
    model.eval()
    preds = []
    crops = list(extract(image, None, plan))
    with torch.no_grad():
        for i in range(0, len(crops), batch_size):
            chunk = crops[i : i + batch_size]
            main, _ = model(image_to_tensor(np.stack([c.image for c in chunk])))
            preds += [(c.anchor, m.numpy()) for c, m in zip(chunk, main)]
    return stitch(preds, plan)


def predict_mask(model, image, stride=None, tile=None):
    return np.argmax(predict_logits(model, image, stride, tile), axis=0).astype(np.uint8)


def evaluate_samples(model, samples, class_map=None, stride=None):
    class_map = class_map or generic_class_map(model.config.num_classes)
    conf = ConfusionMatrix.for_class_map(class_map)
    for s in samples:
        accumulate(conf, predict_mask(model, s.image, stride), s.mask)
    return metrics(conf)


def pixel_accuracy(model, samples, ignore_index=255):
    correct = counted = 0
    for s in samples:
        pred = predict_mask(model, s.image)
        valid = s.mask != ignore_index
        correct += int((pred[valid] == s.mask[valid]).sum())
        counted += int(valid.sum())
    return correct / counted
