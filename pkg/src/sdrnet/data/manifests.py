"""Train/val/test split manifests.

File format, one split per line (``#`` starts a comment)::

    root = /data/vaihingen        # optional, resolves image/mask paths
    train = 1, 3, 5
    val = 7
    test = 2, 4
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from ..errors import InvalidArgumentError, ParseError

VAIHINGEN = {
    "train": ["1", "3", "5", "7", "11", "13", "15", "17", "21", "23", "26", "28", "30", "32", "34", "37"],
    "val": ["7", "28"],
    "test": ["2", "4", "6", "8", "10", "12", "14", "16", "20", "22", "24", "27", "29", "31", "33", "35", "38"],
}

POTSDAM = {
    "train": [
        "2_10", "2_11", "2_12", "3_10", "3_11", "3_12", "4_10", "4_11", "4_12", "5_10", "5_11", "5_12",
        "6_10", "6_11", "6_12", "7_10", "7_12", "7_11", "6_7", "6_8", "6_9", "7_7", "7_8", "7_9",
    ],
    "test": [
        "2_13", "2_14", "3_13", "3_14", "4_13", "4_14", "4_15", "5_13", "5_14", "5_15", "6_13", "6_14",
        "6_15", "7_13",
    ],
    "val": ["4_10", "7_10"],
}

SPLITS = ("train", "val", "test")


@dataclass
class SplitManifest:
    train_ids: List[str] = field(default_factory=list)
    val_ids: List[str] = field(default_factory=list)
    test_ids: List[str] = field(default_factory=list)
    root: Optional[str] = None

    def ids(self, split):
        return getattr(self, f"{split}_ids")

    def overlaps(self):
        pairs = [("train", "val"), ("train", "test"), ("val", "test")]
        return {f"{a}/{b}": sorted(set(self.ids(a)) & set(self.ids(b))) for a, b in pairs}

    def is_disjoint(self):
        return not any(self.overlaps().values())

    def strict(self):
        """Disjoint variant: validation/test ids are dropped from training."""
        held_out = set(self.val_ids) | set(self.test_ids)
        val = [i for i in self.val_ids if i not in set(self.test_ids)]
        return SplitManifest([i for i in self.train_ids if i not in held_out], val, list(self.test_ids), self.root)

    def dumps(self):
        lines = [f"root = {self.root}"] if self.root else []
        lines += [f"{s} = {', '.join(self.ids(s))}" for s in SPLITS]
        return "\n".join(lines) + "\n"

    def image_path(self, sample_id, kind="images"):
        base = Path(self.root) if self.root else Path(".")
        return base / kind / f"{sample_id}.png"


def parse_manifest(text, base_dir=None) -> SplitManifest:
    found = {}
    root = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "root":
            root = value
            continue
        if key not in SPLITS:
            raise ParseError(f"unknown split {key!r} (expected one of {', '.join(SPLITS)})", lineno)
        if key in found:
            raise ParseError(f"split {key!r} given twice", lineno)
        ids = [tok.strip().strip("'\"") for tok in value.split(",") if tok.strip()]
        found[key] = ids
    if not found:
        raise ParseError("manifest declares no splits", None)
    if root is not None and base_dir is not None and not Path(root).is_absolute():
        root = str(Path(base_dir) / root)
    return SplitManifest(found.get("train", []), found.get("val", []), found.get("test", []), root)


def load_split_manifest(dataset="custom", path=None, strict=False) -> SplitManifest:
    if dataset == "vaihingen":
        m = SplitManifest(list(VAIHINGEN["train"]), list(VAIHINGEN["val"]), list(VAIHINGEN["test"]))
    elif dataset == "potsdam":
        m = SplitManifest(list(POTSDAM["train"]), list(POTSDAM["val"]), list(POTSDAM["test"]))
    elif dataset == "custom":
        if path is None:
            raise InvalidArgumentError("a custom manifest needs a path")
        p = Path(path)
        m = parse_manifest(p.read_text(), base_dir=p.parent)
        if m.root is None:
            m.root = str(p.parent)
    else:
        raise InvalidArgumentError(f"unknown dataset {dataset!r}")
    return m.strict() if strict else m
