"""Procedural aerial-like scenes with exact label masks."""

from __future__ import annotations

import numpy as np

from .classmap import generic_class_map
from .tiling import Sample


def _base_colors(num_classes, seed):
    # darkened palette colours keep classes separable but not trivially flat
    palette = generic_class_map(num_classes, seed).palette.astype(np.float64)
    return 0.6 * palette + 50.0


def _draw(mask, rng, cls, kind, size):
    rr, cc = np.ogrid[:size, :size]
    if kind == "rect":
        h, w = rng.integers(size // 8, size // 2 + 1, 2)
        r0, c0 = rng.integers(0, size - h + 1), rng.integers(0, size - w + 1)
        mask[r0 : r0 + h, c0 : c0 + w] = cls
    elif kind == "ellipse":
        cy, cx = rng.uniform(0, size, 2)
        ry, rx = rng.uniform(size / 12, size / 4, 2)
        mask[((rr - cy) / ry) ** 2 + ((cc - cx) / rx) ** 2 <= 1] = cls
    else:
        width = int(rng.integers(max(size // 16, 1), size // 6 + 2))
        offset = int(rng.integers(0, size))
        if rng.random() < 0.5:
            mask[offset : offset + width, :] = cls
        else:
            mask[:, offset : offset + width] = cls


def make_synthetic_dataset(count, size, num_classes=6, seed=0, noise=12.0, shapes=(3, 7)):
    """``count`` scenes of ``size x size`` pixels; every class appears somewhere.

    Each scene starts as a random background class, then receives random
    rectangles, ellipses and stripes of random classes. Image colour is the
    class base colour plus Gaussian noise.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    colors = _base_colors(num_classes, seed)
    masks = []
    for _ in range(count):
        mask = np.full((size, size), rng.integers(num_classes), dtype=np.uint8)
        for _ in range(int(rng.integers(shapes[0], shapes[1] + 1))):
            kind = ("rect", "ellipse", "stripe")[int(rng.integers(3))]
            _draw(mask, rng, int(rng.integers(num_classes)), kind, size)
        masks.append(mask)
    # missing classes get a square in a slot of their own; a stamp can erase
    # another class's only pixels, so repeat until nothing is missing
    q = max(size // 8, 1)
    per_row = size // q
    for _ in range(num_classes + 1):
        missing = [c for c in range(num_classes) if not any((m == c).any() for m in masks)]
        if not missing:
            break
        for cls in missing:
            slot = cls // count
            r0, c0 = (slot // per_row) * q, (slot % per_row) * q
            masks[cls % count][r0 : r0 + q, c0 : c0 + q] = cls
    samples = []
    for i, mask in enumerate(masks):
        img = colors[mask] + rng.normal(0, noise, (size, size, 3))
        img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
        samples.append(Sample(img, mask, f"synth{i:04d}", (0, 0)))
    return samples
