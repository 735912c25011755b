"""Raster I/O (PNG/TIFF via Pillow)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, PngImagePlugin

from ..errors import DataError
from .classmap import ISPRS, ClassMap, decode_mask, encode_mask


def read_image(path):
    try:
        with Image.open(path) as im:
            arr = np.asarray(im)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[..., None]
    return arr


def write_png(path, array, text=None):
    """Write ``array`` (H x W or H x W x 3, uint8) with optional text chunks."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.asarray(array)
    if arr.ndim == 3 and arr.shape[-1] == 1:
        arr = arr[..., 0]
    info = PngImagePlugin.PngInfo()
    for k, v in (text or {}).items():
        info.add_text(str(k), str(v))
    Image.fromarray(arr.astype(np.uint8)).save(path, pnginfo=info)
    return path


def read_mask(path, class_map: ClassMap = ISPRS):
    """Read a colour-coded (H x W x 3) or index (H x W) mask as class indices."""
    arr = read_image(path)
    if arr.shape[-1] >= 3:
        return encode_mask(arr[..., :3], class_map)
    return arr[..., 0].astype(np.uint8)


def write_color_mask(path, index_mask, class_map: ClassMap = ISPRS, text=None):
    return write_png(path, decode_mask(index_mask, class_map), text)
