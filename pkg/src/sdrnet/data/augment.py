"""Seeded joint image/mask augmentation.

Geometric transforms resample image and mask on the same coordinate map
(mask nearest-neighbour, exposed pixels -> ignore index, image -> 0).
Photometric transforms touch the image only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from scipy import ndimage

from ..errors import ParseError
from .classmap import IGNORE_INDEX
from .tiling import Sample

GEOMETRIC = {"hflip", "vflip", "rotate90", "rotate", "transpose", "scale", "shift_scale_rotate", "grid_distortion"}
PHOTOMETRIC = {"brightness", "contrast", "color"}

DEFAULT_PARAMS = {
    "rotate": {"angle": 30.0},
    "scale": {"scale": 0.2},
    "shift_scale_rotate": {"shift": 0.0625, "scale": 0.1, "angle": 45.0},
    "grid_distortion": {"steps": 5, "limit": 0.3},
    "brightness": {"limit": 0.2},
    "contrast": {"limit": 0.2},
    "color": {"limit": 0.1},
}


@dataclass
class Transform:
    name: str
    p: float = 0.5
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in GEOMETRIC | PHOTOMETRIC:
            raise ValueError(f"unknown transform {self.name!r}")
        self.params = {**DEFAULT_PARAMS.get(self.name, {}), **self.params}


@dataclass
class AugmentPolicy:
    transforms: List[Transform] = field(default_factory=list)
    interpolation: str = "linear"  # image resampling: "linear" or "nearest"
    ignore_index: int = IGNORE_INDEX

    @classmethod
    def identity(cls):
        return cls([])

    @classmethod
    def default(cls):
        names = ["hflip", "rotate", "scale", "transpose", "shift_scale_rotate", "grid_distortion",
                 "brightness", "contrast", "color"]
        return cls([Transform(n, 0.5) for n in names])

    @classmethod
    def parse(cls, text):
        """One transform per line: ``name [p=0.5] [key=value ...]``; ``#`` comments.

        ``interpolation=nearest`` on a line of its own sets the image
        resampling mode.
        """
        policy = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if tokens[0].startswith("interpolation="):
                policy.interpolation = tokens[0].split("=", 1)[1]
                continue
            kwargs = {}
            for tok in tokens[1:]:
                if "=" not in tok:
                    raise ParseError(f"expected key=value, got {tok!r}", lineno)
                k, v = tok.split("=", 1)
                try:
                    kwargs[k] = float(v)
                except ValueError:
                    raise ParseError(f"non-numeric value {v!r} for {k}", lineno) from None
            p = kwargs.pop("p", 0.5)
            try:
                policy.transforms.append(Transform(tokens[0], p, kwargs))
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
        return policy

    def dumps(self):
        lines = [f"interpolation={self.interpolation}"]
        for t in self.transforms:
            extra = " ".join(f"{k}={v:g}" for k, v in t.params.items())
            lines.append(f"{t.name} p={t.p:g} {extra}".rstrip())
        return "\n".join(lines) + "\n"


def _affine_coords(h, w, angle_deg=0.0, scale=1.0, shift=(0.0, 0.0)):
    """Source coordinates for each output pixel of a centred similarity."""
    cy, cx = (h - 1) / 2, (w - 1) / 2
    rr, cc = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    y = rr - cy - shift[0] * h
    x = cc - cx - shift[1] * w
    a = math.radians(angle_deg)
    cos, sin = math.cos(a), math.sin(a)
    src_y = (cos * y - sin * x) / scale + cy
    src_x = (sin * y + cos * x) / scale + cx
    return np.stack([src_y, src_x])


def _grid_coords(h, w, rng, steps, limit):
    """Piecewise-linear per-axis warp in the style of grid distortion."""

    def axis(n):
        knots = np.linspace(0, n - 1, int(steps) + 1)
        cells = np.diff(knots) * (1 + rng.uniform(-limit, limit, int(steps)))
        warped = np.concatenate([[0], np.cumsum(cells)])
        warped *= (n - 1) / warped[-1]
        return np.interp(np.arange(n), knots, warped)

    ys, xs = axis(h), axis(w)
    return np.stack(np.meshgrid(ys, xs, indexing="ij"))


def _resample(sample, coords, policy):
    order = 1 if policy.interpolation == "linear" else 0
    img = sample.image
    channels = [
        ndimage.map_coordinates(img[..., ch].astype(np.float64), coords, order=order, mode="constant", cval=0.0)
        for ch in range(img.shape[-1])
    ]
    image = np.clip(np.rint(np.stack(channels, axis=-1)), 0, 255).astype(img.dtype)
    mask = sample.mask
    if mask is not None:
        # out-of-frame sentinel survives nearest-neighbour sampling untouched
        m = ndimage.map_coordinates(mask.astype(np.int32), coords, order=0, mode="constant", cval=-1)
        mask = np.where(m < 0, policy.ignore_index, m).astype(sample.mask.dtype)
    return image, mask


def _apply(t: Transform, image, mask, rng, policy, sample):
    h, w = image.shape[:2]
    prm = t.params
    if t.name == "hflip":
        return image[:, ::-1], None if mask is None else mask[:, ::-1]
    if t.name == "vflip":
        return image[::-1], None if mask is None else mask[::-1]
    if t.name == "transpose":
        return image.swapaxes(0, 1), None if mask is None else mask.T
    if t.name == "rotate90":
        # clockwise quarter turns
        k = int(prm["k"]) if "k" in prm else int(rng.integers(1, 4))
        return np.rot90(image, -k), None if mask is None else np.rot90(mask, -k)
    if t.name in ("rotate", "scale", "shift_scale_rotate", "grid_distortion"):
        if t.name == "rotate":
            coords = _affine_coords(h, w, angle_deg=rng.uniform(-prm["angle"], prm["angle"]))
        elif t.name == "scale":
            coords = _affine_coords(h, w, scale=1 + rng.uniform(-prm["scale"], prm["scale"]))
        elif t.name == "shift_scale_rotate":
            coords = _affine_coords(
                h,
                w,
                angle_deg=rng.uniform(-prm["angle"], prm["angle"]),
                scale=1 + rng.uniform(-prm["scale"], prm["scale"]),
                shift=tuple(rng.uniform(-prm["shift"], prm["shift"], 2)),
            )
        else:
            coords = _grid_coords(h, w, rng, prm["steps"], prm["limit"])
        return _resample(Sample(image, mask), coords, policy)
    img = image.astype(np.float64)
    if t.name == "brightness":
        img = img + 255 * rng.uniform(-prm["limit"], prm["limit"])
    elif t.name == "contrast":
        mean = img.mean()
        img = (img - mean) * (1 + rng.uniform(-prm["limit"], prm["limit"])) + mean
    elif t.name == "color":
        img = img * (1 + rng.uniform(-prm["limit"], prm["limit"], img.shape[-1]))
    return np.clip(np.rint(img), 0, 255).astype(image.dtype), mask


def augment(sample: Sample, seed, policy: AugmentPolicy = None) -> Sample:
    policy = AugmentPolicy.default() if policy is None else policy
    rng = np.random.default_rng(seed)
    image, mask = sample.image, sample.mask
    for t in policy.transforms:
        if rng.random() < t.p:
            image, mask = _apply(t, image, mask, rng, policy, sample)
    image = np.ascontiguousarray(image)
    mask = None if mask is None else np.ascontiguousarray(mask)
    return Sample(image, mask, sample.source, sample.anchor)


def sample_seed(global_seed, source, anchor, epoch=0):
    """Per-sample seed derived from the global seed and provenance only."""
    import zlib

    key = f"{global_seed}|{source}|{anchor[0]},{anchor[1]}|{epoch}".encode()
    return zlib.crc32(key)
