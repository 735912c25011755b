"""Confusion counts, per-class scores and the report table."""

import numpy as np

from sdrnet.data import ISPRS
from sdrnet.evaluation import ConfusionMatrix, accumulate, metrics, report_csv, report_table

rng = np.random.default_rng(0)
gt = rng.integers(0, 6, (128, 128))
gt[:4] = 255  # an ignored strip
pred = np.where(rng.random(gt.shape) < 0.85, np.where(gt == 255, 0, gt), rng.integers(0, 6, gt.shape))

# counts can be accumulated in pieces and merged
conf = ConfusionMatrix.for_class_map(ISPRS)
for rows in np.array_split(np.arange(128), 4):
    accumulate(conf, pred[rows], gt[rows])
print("counted", conf.total, "ignored", conf.ignored_pixels)

report = metrics(conf)  # Clutter is left out of OA and mean F1
print(report_table(report))
print(report_csv(report))

# counting the excluded class's pixels in the OA denominator lowers OA
print("OA with clutter pixels counted:", round(metrics(conf, oa_include_excluded=True).oa, 4))
