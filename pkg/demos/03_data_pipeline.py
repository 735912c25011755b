"""Synthetic scenes, colour masks, tiling, stitching and augmentation."""

import numpy as np

from sdrnet.data import (
    ISPRS,
    AugmentPolicy,
    augment,
    decode_mask,
    encode_mask,
    extract,
    make_synthetic_dataset,
    plan_tiles,
    sample_seed,
    stitch,
)

scene = make_synthetic_dataset(1, 160, 6, seed=3)[0]
print("image", scene.image.shape, scene.image.dtype, "classes present", np.unique(scene.mask))

# masks travel as colour PNGs; the codec is exact
rgb = decode_mask(scene.mask, ISPRS)
assert np.array_equal(encode_mask(rgb, ISPRS), scene.mask)
for i, (name, color) in enumerate(ISPRS.entries):
    print(f"{i}  {name:<20} {color}")

# overlapping windows; the last row and column are clamped to the border
plan = plan_tiles(160, 160, tile=64, stride=48)
print(len(plan), "windows, anchors", plan.windows[:4], "...", plan.windows[-1])
print("coverage per pixel", np.unique(plan.coverage()))

# one-hot "logits" per window stitch back to the original mask
one_hot = np.eye(6)[scene.mask].transpose(2, 0, 1)
tiles = [(s.anchor, one_hot[:, s.anchor[0]:s.anchor[0] + 64, s.anchor[1]:s.anchor[1] + 64])
         for s in extract(scene.image, scene.mask, plan)]
assert np.array_equal(stitch(tiles, plan).argmax(0), scene.mask)

# the same seed gives the same augmented sample
policy = AugmentPolicy.default()
print(policy.dumps())
crop = next(extract(scene.image, scene.mask, plan, "scene"))
seed = sample_seed(0, crop.source, crop.anchor, epoch=0)
a = augment(crop, seed, policy)
b = augment(crop, seed, policy)
assert np.array_equal(a.image, b.image) and np.array_equal(a.mask, b.mask)
print("ignored pixels after augmentation:", int((a.mask == 255).sum()))
