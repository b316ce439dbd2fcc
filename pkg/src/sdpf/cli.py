"""Command-line interface for the SDPF pipeline.

Subcommands cover the full workflow: dither an image, visualize salient
patterns, extract a dataset to a descriptor CSV, train an SVM from it,
classify single images, run the split-and-score evaluation, and time the
pipeline stages.
"""

from __future__ import annotations

import argparse
import random
import sys

from .classifier import SvmConfig, load_model, predict, save_model, train
from .descriptor import (
    DescriptorConfig,
    extract,
    extract_detailed,
    read_descriptors_csv,
    write_descriptors_csv,
)
from .dithering import dither, indexed_to_image
from .evaluation import DEFAULT_SVM_CONFIG, bench, evaluate, ingest, train_count
from .imaging import Image, load_image, save_image
from .saliency import DEFAULT_NMS_WINDOW

POINT_COLOR = (255, 0, 0)
CENTROID_COLOR = (0, 0, 255)
LINE_COLOR = (0, 255, 0)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdpf", description="Salient dither pattern features",
    )
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("dither", help="dither an image to the 8-colour palette")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=_cmd_dither)

    p = sub.add_parser("visualize", help="overlay salient patterns on an image")
    p.add_argument("input")
    p.add_argument("output")
    _descriptor_flags(p)
    p.set_defaults(func=_cmd_visualize)

    p = sub.add_parser("extract", help="extract a dataset into a descriptor CSV")
    p.add_argument("root", help="dataset root with one subdirectory per class")
    p.add_argument("-o", "--output", required=True, help="descriptor CSV path")
    _descriptor_flags(p)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train", help="train an SVM from a descriptor CSV")
    p.add_argument("descriptors", help="CSV written by the extract command")
    p.add_argument("-o", "--output", required=True, help="model file path")
    p.add_argument("--fraction", type=float, default=0.4,
                   help="training fraction per class (1.0 trains on every row)")
    p.add_argument("--seed", type=int, default=0)
    _svm_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("classify", help="predict the class of one image")
    p.add_argument("model", help="model file written by the train command")
    p.add_argument("image")
    _descriptor_flags(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("eval", help="split a dataset, train, and print AP")
    p.add_argument("root", help="dataset root with one subdirectory per class")
    p.add_argument("--fraction", type=float, default=0.4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--augment", default="",
                   help="comma-separated right angles, e.g. 0,90,180,270")
    p.add_argument("--knn", type=int, default=None,
                   help="also score a k-NN baseline with this k")
    _descriptor_flags(p)
    _svm_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", help="time the pipeline stages on one image")
    p.add_argument("image")
    p.add_argument("--reps", type=int, default=100)
    _descriptor_flags(p)
    p.set_defaults(func=_cmd_bench)

    return parser


def _descriptor_flags(parser):
    parser.add_argument("--kd", type=int, default=4, help="distance bin count")
    parser.add_argument("--ka", type=int, default=8, help="angle bin count")
    parser.add_argument("--kc", type=int, default=8, help="colour bin count")
    parser.add_argument("--no-normalize", action="store_true",
                        help="keep raw counts instead of L1 normalizing")
    parser.add_argument("--nms-window", type=int, default=DEFAULT_NMS_WINDOW,
                        help="suppression window side length (odd)")


def _svm_flags(parser):
    parser.add_argument("--svm-c", type=float, default=DEFAULT_SVM_CONFIG.C,
                        help="soft-margin penalty")
    parser.add_argument("--svm-degree", type=int, default=DEFAULT_SVM_CONFIG.degree,
                        help="polynomial kernel degree")
    parser.add_argument("--svm-gamma", type=float, default=DEFAULT_SVM_CONFIG.gamma,
                        help="kernel coefficient (0 = 1/n_features)")


def _descriptor_config(args) -> DescriptorConfig:
    return DescriptorConfig(k_d=args.kd, k_a=args.ka, k_c=args.kc,
                            normalize=not args.no_normalize)


def _svm_config(args, seed: int = 0) -> SvmConfig:
    gamma = args.svm_gamma if args.svm_gamma else None
    return SvmConfig(C=args.svm_c, degree=args.svm_degree, gamma=gamma, seed=seed)


def _cmd_dither(args):
    img = load_image(args.input)
    save_image(indexed_to_image(dither(img)), args.output)


def _cmd_visualize(args):
    img = load_image(args.input)
    result = extract_detailed(img, _descriptor_config(args), args.nms_window)
    canvas = img.pixels.copy()
    if result.frame is not None:
        _draw_orientation_line(canvas, result.frame)
    for point in result.points:
        _draw_cross(canvas, point.x, point.y, POINT_COLOR, arm=2)
    if result.frame is not None:
        _draw_square(canvas, result.frame.x_c, result.frame.y_c, CENTROID_COLOR, radius=2)
    save_image(Image(canvas), args.output)
    print(f"{len(result.points)} salient patterns")


def _cmd_extract(args):
    config = _descriptor_config(args)
    dataset = ingest(args.root)
    rows = []
    for label, paths in dataset.classes:
        for path in paths:
            desc = extract(load_image(path), config, args.nms_window)
            rows.append((str(path), label, desc.values))
    write_descriptors_csv(args.output, rows, config)
    print(f"wrote {len(rows)} descriptors for {len(dataset.classes)} classes "
          f"to {args.output}")


def _cmd_train(args):
    _, rows = read_descriptors_csv(args.descriptors)
    if not 0.0 < args.fraction <= 1.0:
        raise ValueError(f"training fraction must lie in (0, 1], got {args.fraction}")
    if args.fraction < 1.0:
        rows = _training_rows(rows, args.fraction, args.seed)
    model = train([values for _, _, values in rows],
                  [label for _, label, _ in rows],
                  _svm_config(args, seed=args.seed))
    save_model(model, args.output)
    print(f"trained on {len(rows)} descriptors, {len(model.labels)} classes; "
          f"model written to {args.output}")


def _training_rows(rows, fraction, seed):
    by_label: dict[str, list] = {}
    for row in rows:
        by_label.setdefault(row[1], []).append(row)
    rng = random.Random(seed)
    picked = []
    for label in sorted(by_label):
        group = by_label[label]
        rng.shuffle(group)
        n_train = train_count(len(group), fraction)
        if n_train < 1:
            raise ValueError(
                f"class {label!r} with {len(group)} rows yields an empty "
                f"training side at fraction {fraction}"
            )
        picked.extend(group[:n_train])
    return picked


def _cmd_classify(args):
    model = load_model(args.model)
    desc = extract(load_image(args.image), _descriptor_config(args), args.nms_window)
    print(predict(model, desc))


def _cmd_eval(args):
    augment = tuple(int(a) for a in args.augment.split(",") if a.strip() != "")
    report = evaluate(
        args.root, fraction=args.fraction, seed=args.seed, augment=augment,
        config=_descriptor_config(args), svm=_svm_config(args, seed=args.seed),
        window=args.nms_window, knn_k=args.knn,
    )
    print(f"classes: {report.n_classes}  train: {report.n_train}  test: {report.n_test}")
    print(f"AP: {report.ap:.6f}")
    if report.knn_ap is not None:
        print(f"kNN AP: {report.knn_ap:.6f}")


def _cmd_bench(args):
    img = load_image(args.image)
    if args.reps < 1:
        raise ValueError(f"--reps must be >= 1, got {args.reps}")
    report = bench(img, repetitions=args.reps, config=_descriptor_config(args),
                   window=args.nms_window)
    sys.stdout.write(report.to_csv())


def _draw_cross(canvas, x, y, color, arm):
    height, width = canvas.shape[:2]
    cx, cy = int(round(x)), int(round(y))
    for d in range(-arm, arm + 1):
        if 0 <= cy < height and 0 <= cx + d < width:
            canvas[cy, cx + d] = color
        if 0 <= cy + d < height and 0 <= cx < width:
            canvas[cy + d, cx] = color


def _draw_square(canvas, x, y, color, radius):
    height, width = canvas.shape[:2]
    cx, cy = int(round(x)), int(round(y))
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if 0 <= cy + dy < height and 0 <= cx + dx < width:
                canvas[cy + dy, cx + dx] = color


def _draw_orientation_line(canvas, frame):
    height, width = canvas.shape[:2]
    if frame.vertical:
        cx = int(round(frame.x_c))
        if 0 <= cx < width:
            canvas[:, cx] = LINE_COLOR
        return
    if abs(frame.slope) <= 1.0:
        for px in range(width):
            py = int(round(frame.y_c + frame.slope * (px - frame.x_c)))
            if 0 <= py < height:
                canvas[py, px] = LINE_COLOR
    else:
        for py in range(height):
            px = int(round(frame.x_c + (py - frame.y_c) / frame.slope))
            if 0 <= px < width:
                canvas[py, px] = LINE_COLOR


if __name__ == "__main__":
    sys.exit(main())
