from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, Tuple

import numpy as np

from ..errors import DataError, InvalidArgumentError

IGNORE_INDEX = 255
UNDEFINED_RGB = (0, 0, 0)


@dataclass(frozen=True)
class ClassMap:
    """Colour <-> index bijection for label masks.

    ``entries`` is a tuple of ``(name, (r, g, b))`` whose position is the
    class index. Pixels coloured ``undefined_rgb`` map to ``ignore_index``.
    """

    entries: Tuple[Tuple[str, Tuple[int, int, int]], ...]
    ignore_index: int = IGNORE_INDEX
    excluded_from_oa: FrozenSet[int] = field(default_factory=frozenset)
    undefined_rgb: Tuple[int, int, int] = UNDEFINED_RGB

    def __post_init__(self):
        colors = [tuple(c) for _, c in self.entries]
        if len(set(colors)) != len(colors):
            raise InvalidArgumentError("class colours must be pairwise distinct")
        if tuple(self.undefined_rgb) in colors:
            raise InvalidArgumentError("undefined colour collides with a class colour")
        if 0 <= self.ignore_index < len(self.entries):
            raise InvalidArgumentError("ignore_index must lie outside the class index range")
        if any(not 0 <= k < len(self.entries) for k in self.excluded_from_oa):
            raise InvalidArgumentError("excluded class index out of range")

    @property
    def num_classes(self):
        return len(self.entries)

    @property
    def names(self):
        return [n for n, _ in self.entries]

    @property
    def palette(self):
        return np.array([c for _, c in self.entries], dtype=np.uint8)

    def index(self, name):
        return self.names.index(name)

    def color(self, index):
        return tuple(self.entries[index][1])

    def encode(self, rgb_mask):
        return encode_mask(rgb_mask, self)

    def decode(self, index_mask):
        return decode_mask(index_mask, self)


ISPRS = ClassMap(
    entries=(
        ("Impervious surfaces", (255, 255, 255)),
        ("Building", (0, 0, 255)),
        ("Low vegetation", (0, 255, 255)),
        ("Tree", (0, 255, 0)),
        ("Car", (255, 255, 0)),
        ("Clutter", (255, 0, 0)),
    ),
    ignore_index=IGNORE_INDEX,
    excluded_from_oa=frozenset({5}),
)


def generic_class_map(num_classes, seed=0):
    """ISPRS palette for up to six classes, seeded distinct colours beyond."""
    if num_classes <= ISPRS.num_classes:
        entries = ISPRS.entries[:num_classes]
        excluded = frozenset(k for k in ISPRS.excluded_from_oa if k < num_classes)
        return ClassMap(entries, IGNORE_INDEX, excluded)
    rng = np.random.default_rng(seed)
    entries = list(ISPRS.entries)
    used = {c for _, c in entries} | {UNDEFINED_RGB}
    while len(entries) < num_classes:
        c = tuple(int(v) for v in rng.integers(0, 256, 3))
        if c not in used:
            used.add(c)
            entries.append((f"class{len(entries)}", c))
    return ClassMap(tuple(entries), IGNORE_INDEX, ISPRS.excluded_from_oa)


def _pack(rgb):
    rgb = rgb.astype(np.uint32)
    return (rgb[..., 0] << 16) | (rgb[..., 1] << 8) | rgb[..., 2]


def encode_mask(rgb_mask, class_map: ClassMap = ISPRS):
    rgb_mask = np.asarray(rgb_mask)
    if rgb_mask.ndim != 3 or rgb_mask.shape[-1] != 3:
        raise DataError(f"expected an H x W x 3 colour mask, got shape {rgb_mask.shape}")
    keys = _pack(rgb_mask)
    out = np.full(keys.shape, class_map.ignore_index, dtype=np.uint8)
    known = keys == _pack(np.array(class_map.undefined_rgb))
    for idx, (_, color) in enumerate(class_map.entries):
        hit = keys == _pack(np.array(color))
        out[hit] = idx
        known |= hit
    if not known.all():
        r, c = np.argwhere(~known)[0]
        raise DataError(f"unknown mask colour {tuple(int(v) for v in rgb_mask[r, c])} at pixel (row={r}, col={c})")
    return out


def decode_mask(index_mask, class_map: ClassMap = ISPRS):
    index_mask = np.asarray(index_mask)
    lut = np.zeros((256, 3), dtype=np.uint8)
    valid = np.zeros(256, dtype=bool)
    lut[: class_map.num_classes] = class_map.palette
    valid[: class_map.num_classes] = True
    if 0 <= class_map.ignore_index < 256:
        lut[class_map.ignore_index] = class_map.undefined_rgb
        valid[class_map.ignore_index] = True
    if index_mask.size and (index_mask.min() < 0 or index_mask.max() > 255 or not valid[index_mask].all()):
        bad = index_mask[(index_mask < 0) | (index_mask > 255) | ~valid[np.clip(index_mask, 0, 255)]]
        raise DataError(f"class index {int(bad.flat[0])} out of range for {class_map.num_classes} classes")
    return lut[index_mask]


def erode_boundaries(index_mask, class_map: ClassMap = ISPRS, width=1):
    """Set pixels within ``width`` of a class boundary to ``ignore_index``."""
    from scipy import ndimage

    m = np.asarray(index_mask)
    edge = np.zeros(m.shape, dtype=bool)
    edge[:-1, :] |= m[:-1, :] != m[1:, :]
    edge[1:, :] |= m[:-1, :] != m[1:, :]
    edge[:, :-1] |= m[:, :-1] != m[:, 1:]
    edge[:, 1:] |= m[:, :-1] != m[:, 1:]
    if width > 1:
        edge = ndimage.binary_dilation(edge, iterations=width - 1)
    out = m.copy()
    out[edge] = class_map.ignore_index
    return out
