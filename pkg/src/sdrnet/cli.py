"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 the dilation
schedule grids, 3 runtime or data error.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, InvalidArgumentError, SDRNetError

EXIT_OK, EXIT_USAGE, EXIT_GRIDDING, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def class_map_for(num_classes):
    from .data import ISPRS, generic_class_map

    return ISPRS if num_classes == ISPRS.num_classes else generic_class_map(num_classes)


def _write_manifest(path, ids, seed=None, root="."):
    lines = [f"# seed={seed}"] if seed is not None else []
    lines.append(f"root = {root}")
    joined = ", ".join(ids)
    lines += [f"train = {joined}", f"val = {joined}", f"test = {joined}"]
    Path(path).write_text("\n".join(lines) + "\n")


def _load_split(manifest_path, split, class_map):
    from .data import Sample, load_split_manifest
    from .data.io import read_image, read_mask

    manifest = load_split_manifest("custom", manifest_path)
    ids = manifest.ids(split)
    if not ids:
        raise InvalidArgumentError(f"split {split!r} in {manifest_path} is empty")
    out = []
    for sid in ids:
        image = read_image(manifest.image_path(sid, "images"))
        mask = read_mask(manifest.image_path(sid, "masks"), class_map)
        out.append(Sample(image[..., :3], mask, sid, (0, 0)))
    return out


def _tile_samples(samples, size):
    from .data import extract, plan_tiles

    out = []
    for s in samples:
        h, w = s.image.shape[:2]
        if min(h, w) < size:
            raise InvalidArgumentError(f"{s.source} is {h}x{w}, smaller than input_size {size}")
        out += list(extract(s.image, s.mask, plan_tiles(h, w, size), s.source))
    return out


def cmd_analyze(args):
    from .dilation import DilationSchedule, check_gridding, footprint, render_ascii, render_png

    try:
        schedule = DilationSchedule.parse(args.rates, args.kernel)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = check_gridding(schedule)
    print(report.as_text())
    if args.render or args.render_ascii:
        grid = footprint(schedule)
        if args.render:
            render_png(grid, args.render)
        if args.render_ascii:
            print(render_ascii(grid))
    return EXIT_OK if report.passes else EXIT_GRIDDING


def cmd_tile(args):
    from .data import extract, plan_tiles
    from .data.io import read_image, read_mask, write_color_mask, write_png

    class_map = class_map_for(args.classes)
    image = read_image(args.image)[..., :3]
    mask = read_mask(args.mask, class_map) if args.mask else None
    plan = plan_tiles(image.shape[0], image.shape[1], args.tile, args.stride)
    out = Path(args.out)
    stem = Path(args.image).stem
    ids = []
    for s in extract(image, mask, plan, stem):
        sid = f"{stem}_{s.anchor[0]}_{s.anchor[1]}"
        text = {"source": stem, "anchor": f"{s.anchor[0]},{s.anchor[1]}"}
        write_png(out / "images" / f"{sid}.png", s.image, text)
        if s.mask is not None:
            write_color_mask(out / "masks" / f"{sid}.png", s.mask, class_map, text)
        ids.append(sid)
    _write_manifest(out / "manifest.txt", ids)
    print(f"{len(ids)} tiles ({plan.tile}px, stride {plan.stride}) written to {out}")
    return EXIT_OK


def cmd_synth(args):
    from .data import make_synthetic_dataset
    from .data.io import write_color_mask, write_png

    class_map = class_map_for(args.classes)
    samples = make_synthetic_dataset(args.count, args.size, args.classes, seed=args.seed)
    out = Path(args.out)
    header = {"seed": args.seed}
    for s in samples:
        write_png(out / "images" / f"{s.source}.png", s.image, header)
        write_color_mask(out / "masks" / f"{s.source}.png", s.mask, class_map, header)
    _write_manifest(out / "manifest.txt", [s.source for s in samples], args.seed)
    print(f"{len(samples)} synthetic {args.size}x{args.size} samples written to {out} (seed {args.seed})")
    return EXIT_OK


def cmd_train(args):
    from .data import AugmentPolicy
    from .model import build_model
    from .runconfig import RunConfig, load_run_config
    from .training import train

    run = load_run_config(args.config) if args.config else RunConfig()
    if args.max_iter is not None:
        run.train.max_iter = args.max_iter
    if args.seed is not None:
        run.train.seed = args.seed
    run.train.__post_init__()
    manifest = args.data or run.data.manifest
    if not manifest:
        raise ConfigError("no training data: set [data] manifest or pass --data")
    if run.data.augment == "none":
        policy = None
    elif run.data.augment == "default":
        policy = AugmentPolicy.default()
    else:
        policy = AugmentPolicy.parse(Path(run.data.augment).read_text())

    model = build_model(run.model, seed=run.train.seed)
    class_map = class_map_for(run.model.num_classes)
    size = run.model.input_size
    data = _tile_samples(_load_split(manifest, run.data.split, class_map), size)
    val = None
    if run.data.val_split:
        val = _load_split(manifest, run.data.val_split, class_map)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.ini").write_text(f"# seed={run.seed}\n" + run.dumps())
    ckpt, tlog = train(
        model, data, run.train, run.loss, out_dir=out, val_dataset=val, policy=policy,
        log_csv=out / "train_log.csv", class_map=class_map,
    )
    last = tlog.records[-1]
    print(f"trained {last['iter']} iterations on {len(data)} tiles; final loss {last['total_loss']:.4f}")
    print(f"checkpoint: {ckpt}")
    return EXIT_OK


def _check_classes(config, classes):
    if classes is not None and classes != config.num_classes:
        raise ConfigError(f"checkpoint predicts {config.num_classes} classes, class map has {classes}")


def cmd_eval(args):
    from .evaluation import ConfusionMatrix, accumulate, metrics, report_csv, report_table
    from .inference import predict_mask
    from .model import load_checkpoint

    model, meta = load_checkpoint(args.checkpoint)
    _check_classes(model.config, args.classes)
    class_map = class_map_for(model.config.num_classes)
    samples = _load_split(args.manifest, args.split, class_map)
    conf = ConfusionMatrix.for_class_map(class_map)
    for s in samples:
        accumulate(conf, predict_mask(model, s.image, args.stride), s.mask)
    report = metrics(conf)
    header = f"# checkpoint={args.checkpoint} seed={meta.get('seed')} split={args.split} images={len(samples)}\n"
    table = report_table(report)
    Path(args.out).write_text(header + table)
    if args.csv:
        Path(args.csv).write_text(header + report_csv(report))
    print(table, end="")
    return EXIT_OK


def cmd_predict(args):
    from .data.io import read_image, write_color_mask, write_png
    from .inference import predict_mask
    from .model import load_checkpoint

    model, meta = load_checkpoint(args.checkpoint)
    _check_classes(model.config, args.classes)
    class_map = class_map_for(model.config.num_classes)
    image = read_image(args.image)[..., :3]
    pred = predict_mask(model, image, args.stride)
    text = {"seed": meta.get("seed"), "checkpoint": Path(args.checkpoint).name}
    write_color_mask(args.out, pred, class_map, text)
    if args.index_out:
        write_png(args.index_out, pred, text)
    digest = hashlib.sha256(pred.tobytes()).hexdigest()[:16]
    print(f"{pred.shape[0]}x{pred.shape[1]} prediction written to {args.out} (sha256 {digest})")
    return EXIT_OK


def cmd_summary(args):
    from .model import ModelConfig, build_model, summarize
    from .runconfig import load_run_config

    config = load_run_config(args.config).model if args.config else ModelConfig()
    if args.input_size:
        config = config.replace(input_size=args.input_size)
    summary = summarize(build_model(config, seed=0), config.input_size)
    print(summary.to_json() if args.json else summary.table())
    return EXIT_OK


def build_parser():
    p = _Parser(prog="sdrnet", description="Stacked dilated-residual segmentation network tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    a = sub.add_parser("analyze-dilations", help="max-gap gridding check for a dilation schedule")
    a.add_argument("--rates", required=True, help="comma-separated rates, e.g. 1,2,5")
    a.add_argument("--kernel", type=int, default=3)
    a.add_argument("--render", metavar="PNG", help="write the 2-D footprint as a PNG")
    a.add_argument("--render-ascii", action="store_true", help="print the 2-D footprint")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("tile", help="cut an image (and mask) into training windows")
    t.add_argument("--image", required=True)
    t.add_argument("--mask")
    t.add_argument("--tile", type=int, default=256)
    t.add_argument("--stride", type=int)
    t.add_argument("--classes", type=int, default=6)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_tile)

    s = sub.add_parser("synth", help="generate a synthetic labelled dataset")
    s.add_argument("--count", type=int, default=8)
    s.add_argument("--size", type=int, default=64)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--classes", type=int, default=6)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    tr = sub.add_parser("train", help="train from a run config")
    tr.add_argument("--config", help="run config file ([model] [train] [loss] [data])")
    tr.add_argument("--data", help="manifest path, overrides [data] manifest")
    tr.add_argument("--max-iter", type=int)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score a checkpoint on a manifest split")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--manifest", required=True)
    e.add_argument("--split", default="test")
    e.add_argument("--stride", type=int)
    e.add_argument("--classes", type=int)
    e.add_argument("--out", required=True)
    e.add_argument("--csv")
    e.set_defaults(func=cmd_eval)

    pr = sub.add_parser("predict", help="segment one image with tiled inference")
    pr.add_argument("--checkpoint", required=True)
    pr.add_argument("--image", required=True)
    pr.add_argument("--out", required=True, help="colour PNG")
    pr.add_argument("--index-out", help="also write the class-index PNG")
    pr.add_argument("--stride", type=int)
    pr.add_argument("--classes", type=int)
    pr.set_defaults(func=cmd_predict)

    m = sub.add_parser("model-summary", help="parameter and FLOP breakdown")
    m.add_argument("--config")
    m.add_argument("--input-size", type=int)
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_summary)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sdrnet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"sdrnet {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SDRNetError, OSError) as exc:
        print(f"sdrnet {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
