"""Dual-head supervision, poly-decayed AMSGrad, and the training loop."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import torch

from .data.augment import AugmentPolicy, augment, sample_seed
from .data.classmap import IGNORE_INDEX
from .errors import ConfigError, InvalidArgumentError, TrainingDivergedError

log = logging.getLogger(__name__)


class AllIgnoredWarning(UserWarning):
    """Every target pixel carried the ignore index; the loss is defined as 0."""


@dataclass
class LossConfig:
    class_weights: Optional[Sequence[float]] = None  # None -> all ones
    alpha: float = 1.0
    beta: float = 0.4
    ignore_index: int = IGNORE_INDEX
    weighting: str = "uniform"  # or "inverse_frequency", resolved by train()

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ConfigError(f"need alpha >= 0, beta >= 0, alpha + beta > 0 (got {self.alpha}, {self.beta})")
        if self.class_weights is not None and any(w < 0 for w in self.class_weights):
            raise ConfigError("class weights must be non-negative")
        if self.weighting not in ("uniform", "inverse_frequency"):
            raise ConfigError(f"unknown class weighting {self.weighting!r}")


@dataclass
class TrainConfig:
    batch_size: int = 5
    max_iter: int = 1000
    base_lr: float = 1e-3
    weight_decay: float = 2e-5
    poly_power: float = 0.9
    amsgrad: bool = True
    seed: int = 0
    checkpoint_every: int = 0  # 0 -> only the final checkpoint
    log_every: int = 10

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.base_lr < 0:
            raise ConfigError("base_lr must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


def image_to_tensor(images):
    """uint8 N x H x W x C (or H x W x C) -> float32 N x C x H x W, roughly zero-centred."""
    arr = np.asarray(images)
    if arr.ndim == 3:
        arr = arr[None]
    x = torch.from_numpy(np.ascontiguousarray(arr.transpose(0, 3, 1, 2))).float()
    return (x / 255.0 - 0.5) / 0.25


def weighted_ce(logits, target, config: LossConfig = None, class_weights=None):
    """Class-weighted softmax cross-entropy, averaged over non-ignored pixels.

    Per pixel: ``-W[t] * log softmax(logits)[t]``. The mean divides by the
    number of counted pixels, not by the weight sum, so scaling every weight
    by c scales the loss by c. Ignored pixels contribute neither value nor
    gradient.
    """
    config = config or LossConfig()
    ignore = config.ignore_index
    k = logits.shape[1]
    if class_weights is None:
        class_weights = config.class_weights
    weights = torch.ones(k, dtype=logits.dtype) if class_weights is None else torch.as_tensor(
        class_weights, dtype=logits.dtype
    )
    if weights.numel() != k:
        raise ConfigError(f"{weights.numel()} class weights for {k} classes")
    target = target.long()
    valid = target != ignore
    if target.numel() and valid.any():
        bad = target[valid]
        if bad.min() < 0 or bad.max() >= k:
            raise InvalidArgumentError(f"target class outside [0, {k}) and not ignore_index")
    if not valid.any():
        warnings.warn("all target pixels are ignored; loss set to 0", AllIgnoredWarning, stacklevel=2)
        return logits.sum() * 0.0
    # select counted pixels first, so the per-pixel arithmetic is identical
    # to a batch that never contained the ignored ones
    rows = logits.movedim(1, -1).reshape(-1, k)[valid.reshape(-1)]
    t = target[valid]
    logp = torch.log_softmax(rows, dim=1)
    nll = -logp.gather(1, t.unsqueeze(1)).squeeze(1) * weights[t]
    return nll.sum() / nll.numel()


def total_loss(main, inter, config: LossConfig):
    if inter is None:
        return config.alpha * main
    return config.alpha * main + config.beta * inter


def lr_factor(cur_iter, max_iter, power=0.9):
    if max_iter < 1 or cur_iter < 0:
        raise InvalidArgumentError("need 0 <= cur_iter <= max_iter and max_iter >= 1")
    if cur_iter > max_iter:
        raise InvalidArgumentError(f"cur_iter {cur_iter} exceeds max_iter {max_iter}")
    return (1.0 - cur_iter / max_iter) ** power


def inverse_frequency_weights(masks, num_classes, ignore_index=IGNORE_INDEX):
    counts = np.zeros(num_classes, dtype=np.float64)
    for m in masks:
        m = np.asarray(m)
        counts += np.bincount(m[m != ignore_index].ravel(), minlength=num_classes)[:num_classes]
    freq = counts / max(counts.sum(), 1)
    w = np.where(freq > 0, 1.0 / np.maximum(freq, 1e-12), 0.0)
    present = w > 0
    if present.any():
        w[present] *= present.sum() / w[present].sum()
    return w.tolist()


def make_optimizer(model, cfg: TrainConfig):
    """AdamW (decoupled decay, optional AMSGrad); no decay on norms/biases."""
    decay, no_decay = [], []
    for p in model.parameters():
        if p.requires_grad:
            (no_decay if p.ndim <= 1 else decay).append(p)
    groups = [
        {"params": decay, "weight_decay": cfg.weight_decay},
        {"params": no_decay, "weight_decay": 0.0},
    ]
    return torch.optim.AdamW(groups, lr=cfg.base_lr, amsgrad=cfg.amsgrad)


@dataclass
class TrainLog:
    records: List[dict] = field(default_factory=list)
    validation: List[dict] = field(default_factory=list)
    seed: Optional[int] = None

    FIELDS = ("iter", "lr", "main_loss", "inter_loss", "total_loss")

    def append(self, **rec):
        if self.records and rec["iter"] <= self.records[-1]["iter"]:
            raise ValueError("iterations must increase")
        self.records.append(rec)

    def column(self, name):
        return [r[name] for r in self.records]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            if self.seed is not None:
                fh.write(f"# seed={self.seed}\n")
            w = csv.writer(fh)
            w.writerow(self.FIELDS)
            for r in self.records:
                w.writerow([r["iter"]] + [repr(float(r[k])) for k in self.FIELDS[1:]])

    @classmethod
    def read_csv(cls, path):
        with open(path) as fh:
            lines = [l for l in fh if not l.startswith("#")]
        out = cls()
        for row in csv.DictReader(lines):
            out.records.append({"iter": int(row["iter"]), **{k: float(row[k]) for k in cls.FIELDS[1:]}})
        return out


class _Batches:
    """Seeded epoch-permutation batch order over a finite sample list."""

    def __init__(self, n, batch_size, seed):
        self.n = n
        self.batch_size = batch_size
        self.rng = np.random.default_rng(seed)
        self.epoch = -1
        self.order = []

    def next(self):
        idx = []
        while len(idx) < self.batch_size:
            if not self.order:
                self.epoch += 1
                self.order = self.rng.permutation(self.n).tolist()
            idx.append(self.order.pop(0))
        return idx, self.epoch


def train(
    model,
    dataset,
    train_config: TrainConfig,
    loss_config: LossConfig = None,
    out_dir=None,
    val_dataset=None,
    policy: AugmentPolicy = None,
    log_csv=None,
    class_map=None,
):
    """Train ``model`` in place on a list of :class:`Sample`.

    Returns ``(checkpoint, log)``: the final checkpoint path when
    ``out_dir`` is given, else the final state dict.
    """
    from .model.checkpoint import save_checkpoint

    cfg = train_config
    loss_cfg = loss_config or LossConfig()
    if not dataset:
        raise InvalidArgumentError("training dataset is empty")
    stacked = getattr(model, "head_inter", None) is not None
    if not stacked and loss_cfg.beta != 0:
        loss_cfg = LossConfig(loss_cfg.class_weights, loss_cfg.alpha, 0.0, loss_cfg.ignore_index, loss_cfg.weighting)
    weights = loss_cfg.class_weights
    if weights is None and loss_cfg.weighting == "inverse_frequency":
        weights = inverse_frequency_weights([s.mask for s in dataset], model.config.num_classes, loss_cfg.ignore_index)

    torch.manual_seed(cfg.seed)
    opt = make_optimizer(model, cfg)
    batches = _Batches(len(dataset), cfg.batch_size, cfg.seed)
    tlog = TrainLog(seed=cfg.seed)
    out_dir = Path(out_dir) if out_dir is not None else None
    ckpt = None
    model.train()
    for it in range(cfg.max_iter):
        lr = cfg.base_lr * lr_factor(it, cfg.max_iter, cfg.poly_power)
        for g in opt.param_groups:
            g["lr"] = lr
        idx, epoch = batches.next()
        samples = [dataset[i] for i in idx]
        if policy is not None:
            samples = [augment(s, sample_seed(cfg.seed, s.source, s.anchor, epoch), policy) for s in samples]
        x = image_to_tensor(np.stack([s.image for s in samples]))
        y = torch.from_numpy(np.stack([s.mask for s in samples]).astype(np.int64))

        main_logits, inter_logits = model(x)
        main = weighted_ce(main_logits, y, loss_cfg, weights)
        inter = weighted_ce(inter_logits, y, loss_cfg, weights) if inter_logits is not None else None
        loss = total_loss(main, inter, loss_cfg)
        inter_val = float(inter.detach()) if inter is not None else math.nan
        if not torch.isfinite(loss):
            record = {"iter": it + 1, "lr": lr, "main_loss": float(main.detach()), "inter_loss": inter_val,
                      "provenance": [s.provenance for s in samples]}
            raise TrainingDivergedError(f"non-finite loss at iteration {it + 1}", record)
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        tlog.append(iter=it + 1, lr=lr, main_loss=float(main.detach()), inter_loss=inter_val, total_loss=float(loss.detach()))
        if cfg.log_every and (it + 1) % cfg.log_every == 0:
            log.info("iter %d lr %.3g loss %.4f", it + 1, lr, float(loss.detach()))

        last = it + 1 == cfg.max_iter
        if (cfg.checkpoint_every and (it + 1) % cfg.checkpoint_every == 0) or last:
            if val_dataset:
                from .inference import evaluate_samples

                rep = evaluate_samples(model, val_dataset, class_map=class_map)
                tlog.validation.append({"iter": it + 1, "oa": rep.oa, "mean_f1": rep.mean_f1})
                model.train()
            if out_dir is not None:
                name = "checkpoint.npz" if last else f"checkpoint_{it + 1:06d}.npz"
                ckpt = save_checkpoint(out_dir / name, model, meta={"iter": it + 1, "seed": cfg.seed})
            if log_csv is not None:
                tlog.to_csv(log_csv)
    model.eval()
    if ckpt is None:
        ckpt = {k: v.detach().clone() for k, v in model.state_dict().items()}
    return ckpt, tlog
