from .augment import AugmentPolicy, Transform, augment, sample_seed
from .classmap import IGNORE_INDEX, ISPRS, ClassMap, decode_mask, encode_mask, erode_boundaries, generic_class_map
from .manifests import SplitManifest, load_split_manifest, parse_manifest
from .synthetic import make_synthetic_dataset
from .tiling import Sample, TilePlan, extract, plan_tiles, stitch

__all__ = [
    "AugmentPolicy",
    "ClassMap",
    "IGNORE_INDEX",
    "ISPRS",
    "Sample",
    "SplitManifest",
    "TilePlan",
    "Transform",
    "augment",
    "decode_mask",
    "encode_mask",
    "erode_boundaries",
    "extract",
    "generic_class_map",
    "load_split_manifest",
    "make_synthetic_dataset",
    "parse_manifest",
    "plan_tiles",
    "sample_seed",
    "stitch",
]
