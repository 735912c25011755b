from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from ..errors import DataError, InvalidArgumentError


@dataclass
class TilePlan:
    image_height: int
    image_width: int
    tile: int
    stride: int
    windows: List[Tuple[int, int]]

    def __len__(self):
        return len(self.windows)

    def coverage(self):
        """Per-pixel count of covering windows."""
        count = np.zeros((self.image_height, self.image_width), dtype=np.int32)
        for r, c in self.windows:
            count[r : r + self.tile, c : c + self.tile] += 1
        return count


@dataclass
class Sample:
    image: np.ndarray  # H x W x C, uint8
    mask: Optional[np.ndarray]  # H x W class indices / ignore
    source: str = ""
    anchor: Tuple[int, int] = (0, 0)

    @property
    def provenance(self):
        return (self.source, self.anchor)


def _anchors(length, tile, stride):
    anchors = list(range(0, length - tile + 1, stride))
    if anchors[-1] != length - tile:
        anchors.append(length - tile)
    return anchors


def plan_tiles(height, width, tile=256, stride=None) -> TilePlan:
    """Windows at ``stride`` steps, the last row/column clamped to the border."""
    stride = tile if stride is None else stride
    if tile < 1 or tile > min(height, width):
        raise InvalidArgumentError(f"tile {tile} does not fit a {height}x{width} image")
    if not 1 <= stride <= tile:
        raise InvalidArgumentError(f"stride must be in [1, {tile}], got {stride}")
    rows = _anchors(height, tile, stride)
    cols = _anchors(width, tile, stride)
    return TilePlan(height, width, tile, stride, [(r, c) for r in rows for c in cols])


def extract(image, mask, plan: TilePlan, source="") -> Iterator[Sample]:
    image = np.asarray(image)
    if image.shape[:2] != (plan.image_height, plan.image_width):
        raise DataError(f"image {image.shape[:2]} does not match plan {(plan.image_height, plan.image_width)}")
    if mask is not None and np.asarray(mask).shape[:2] != image.shape[:2]:
        raise DataError(f"mask {np.asarray(mask).shape[:2]} does not match image {image.shape[:2]}")
    t = plan.tile
    for r, c in plan.windows:
        crop_mask = None if mask is None else np.array(mask[r : r + t, c : c + t])
        yield Sample(np.array(image[r : r + t, c : c + t]), crop_mask, source, (r, c))


def stitch(predictions, plan: TilePlan, out_dims=None):
    """Average per-window logits (``C x t x t`` or ``t x t``) into a frame.

    ``predictions`` is an iterable of ``(anchor, tile_array)``.
    """
    preds = {tuple(a): np.asarray(p) for a, p in predictions}
    missing = [a for a in plan.windows if tuple(a) not in preds]
    if missing:
        raise DataError(f"no prediction for window anchored at {missing[0]}")
    h, w = out_dims or (plan.image_height, plan.image_width)
    first = next(iter(preds.values()))
    lead = first.shape[:-2]
    acc = np.zeros(lead + (h, w), dtype=np.float64)
    count = np.zeros((h, w), dtype=np.int32)
    t = plan.tile
    for r, c in plan.windows:
        acc[..., r : r + t, c : c + t] += preds[(r, c)]
        count[r : r + t, c : c + t] += 1
    return acc / count
