"""Evaluation harness: dataset ingest, splitting, augmentation, scoring.

A dataset is a directory with one subdirectory per class. Splitting
shuffles each class with a seeded generator and takes a rounded fraction
for training, so runs are reproducible. Average precision is the mean
over classes of the precision of the items predicted into that class
(a class that receives no predictions contributes 0). bench times every
pipeline stage separately on one image, single-threaded.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classifier
from .classifier import SvmConfig, SvmModel, knn_predict, predict
from .descriptor import (
    DEFAULT_CONFIG,
    DescriptorConfig,
    _accumulate,
    _assign_angle_bins,
    _assign_distance_bins,
    _centroid,
    _distance_bin_edges,
    _fit_slope,
    _l1_normalize,
    _resolve_theta0,
    _squared_distances,
    extract,
)
from .dithering import DEFAULT_COEFFICIENTS, DEFAULT_PALETTE, _dither_kernel
from .imaging import Image, load_image, rotate90
from .patterns import _grid_kernel
from .saliency import DEFAULT_NMS_WINDOW, _hessian_kernel, _nms_kernel, _threshold_kernel

#: Supported image suffixes during dataset ingestion.
IMAGE_SUFFIXES = (".ppm", ".png")

#: SVM settings used when the caller does not supply any. L1-normalized
#: descriptors have tiny pairwise inner products, and the conventional
#: gamma of 1/n_features flattens the polynomial kernel to the point
#: where a one-vs-rest machine cannot separate anything at moderate C.
#: gamma=1 keeps the inner products unscaled and a large C compensates
#: for the remaining small kernel spread.
DEFAULT_SVM_CONFIG = SvmConfig(C=1000.0, gamma=1.0)

#: Right angles usable for lossless augmentation.
RIGHT_ANGLES = (0, 90, 180, 270)


@dataclass(frozen=True)
class Dataset:
    """Class labels (subdirectory names, sorted) and their image paths."""

    root: Path
    classes: tuple[tuple[str, tuple[Path, ...]], ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.classes)

    @property
    def n_images(self) -> int:
        return sum(len(paths) for _, paths in self.classes)


@dataclass(frozen=True)
class SplitItem:
    """One evaluation item: an image path, its label, and a lossless
    rotation (in quarter turns) to apply after loading."""

    path: Path
    label: str
    quarter_turns: int = 0

    def load(self) -> Image:
        img = load_image(self.path)
        return rotate90(img, self.quarter_turns) if self.quarter_turns else img


@dataclass(frozen=True)
class Split:
    train: tuple[SplitItem, ...]
    test: tuple[SplitItem, ...]
    seed: int
    train_fraction: float


def ingest(root) -> Dataset:
    """Scan a dataset directory: one subdirectory per class, images inside.

    Deterministic: classes and paths come out sorted by name.
    """
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"dataset root {root} is not a directory")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise ValueError(f"dataset root {root} contains no class directories")
    classes = []
    for class_dir in class_dirs:
        paths = sorted(
            p for p in class_dir.iterdir()
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not paths:
            raise ValueError(f"class directory {class_dir} contains no images")
        classes.append((class_dir.name, tuple(paths)))
    return Dataset(root=root, classes=tuple(classes))


def train_count(n_items: int, fraction: float) -> int:
    """Training-side size for a class of n_items: round-half-up."""
    return math.floor(fraction * n_items + 0.5)


def split(dataset: Dataset, fraction: float = 0.4, seed: int = 0) -> Split:
    """Per-class seeded shuffle, then a rounded-fraction prefix as train.

    Every class must land at least one image on each side.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"train fraction must lie in (0, 1), got {fraction}")
    rng = random.Random(seed)
    train: list[SplitItem] = []
    test: list[SplitItem] = []
    for label, paths in dataset.classes:
        order = list(paths)
        rng.shuffle(order)
        n_train = train_count(len(order), fraction)
        if n_train < 1 or n_train >= len(order):
            raise ValueError(
                f"class {label!r} with {len(order)} images cannot be split at "
                f"fraction {fraction}: both sides need at least one image"
            )
        train.extend(SplitItem(path=p, label=label) for p in order[:n_train])
        test.extend(SplitItem(path=p, label=label) for p in order[n_train:])
    return Split(train=tuple(train), test=tuple(test), seed=seed, train_fraction=fraction)


def augment_rotations(split_: Split, angles) -> Split:
    """Add lossless right-angle rotated copies of every training item.

    Each angle contributes one copy per item; 0 degrees is the original,
    which is present exactly once whether or not 0 is listed. The test
    side is untouched.
    """
    angle_set = sorted(set(int(a) for a in angles))
    for angle in angle_set:
        if angle not in RIGHT_ANGLES:
            raise ValueError(
                f"only right-angle rotations {RIGHT_ANGLES} are lossless, got {angle}"
            )
    extra = [a for a in angle_set if a != 0]
    train: list[SplitItem] = []
    for item in split_.train:
        train.append(item)
        for angle in extra:
            turns = (item.quarter_turns + angle // 90) % 4
            train.append(SplitItem(path=item.path, label=item.label, quarter_turns=turns))
    return Split(train=tuple(train), test=split_.test, seed=split_.seed,
                 train_fraction=split_.train_fraction)


def average_precision(predictions, truth, n_classes: int) -> float:
    """Mean over classes of the precision of items predicted into it, x100.

    A class nothing was predicted into contributes 0.
    """
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(truth, dtype=np.int64)
    if pred.size != true.size:
        raise ValueError(f"got {pred.size} predictions for {true.size} truth labels")
    if pred.size == 0:
        raise ValueError("cannot score an empty prediction set")
    if n_classes < 1:
        raise ValueError(f"n_classes must be >= 1, got {n_classes}")
    total = 0.0
    for n in range(n_classes):
        assigned = pred == n
        if assigned.any():
            total += 100.0 * np.count_nonzero(assigned & (true == n)) / np.count_nonzero(assigned)
    return total / n_classes


def extract_items(
    items,
    config: DescriptorConfig = DEFAULT_CONFIG,
    window: int = DEFAULT_NMS_WINDOW,
) -> np.ndarray:
    """Descriptor matrix for a sequence of SplitItems, one row per item."""
    rows = [extract(item.load(), config, window).values for item in items]
    if not rows:
        return np.empty((0, config.length), dtype=np.float64)
    return np.vstack(rows)


@dataclass(frozen=True)
class EvalReport:
    ap: float
    knn_ap: float | None
    n_classes: int
    n_train: int
    n_test: int


def evaluate(
    root,
    fraction: float = 0.4,
    seed: int = 0,
    augment=(),
    config: DescriptorConfig = DEFAULT_CONFIG,
    svm: SvmConfig | None = None,
    window: int = DEFAULT_NMS_WINDOW,
    knn_k: int | None = None,
) -> EvalReport:
    """Full protocol: ingest, split, optionally augment, train, score."""
    dataset = ingest(root)
    split_ = split(dataset, fraction=fraction, seed=seed)
    if augment:
        split_ = augment_rotations(split_, augment)
    return evaluate_split(split_, dataset.labels, config=config, svm=svm,
                          window=window, knn_k=knn_k)


def evaluate_split(
    split_: Split,
    labels,
    config: DescriptorConfig = DEFAULT_CONFIG,
    svm: SvmConfig | None = None,
    window: int = DEFAULT_NMS_WINDOW,
    knn_k: int | None = None,
) -> EvalReport:
    """Score an already-prepared split (label table = all dataset labels)."""
    labels = tuple(labels)
    index = {label: n for n, label in enumerate(labels)}
    train_x = extract_items(split_.train, config, window)
    test_x = extract_items(split_.test, config, window)
    model = classifier.train(
        train_x, [item.label for item in split_.train],
        svm if svm is not None else DEFAULT_SVM_CONFIG,
    )
    truth = [index[item.label] for item in split_.test]
    preds = [index[predict(model, x)] for x in test_x]
    ap = average_precision(preds, truth, len(labels))
    knn_ap = None
    if knn_k is not None:
        train_labels = [item.label for item in split_.train]
        knn_preds = [index[knn_predict(train_x, train_labels, x, knn_k)] for x in test_x]
        knn_ap = average_precision(knn_preds, truth, len(labels))
    return EvalReport(ap=ap, knn_ap=knn_ap, n_classes=len(labels),
                      n_train=len(split_.train), n_test=len(split_.test))


#: Pipeline stages reported by bench, in execution order.
STAGE_NAMES = (
    "ED-Dithering",
    "Colour sorting",
    "Calculate Hessian",
    "Analyse Hessian",
    "Non-max suppression",
    "Centroid",
    "Centroid distance",
    "Distance bin ranges",
    "Dominant orientation",
    "Resolving upside down",
    "SDPF angles",
    "Descriptor construction",
)


@dataclass(frozen=True)
class BenchReport:
    """Mean wall-clock milliseconds per stage, plus the whole-pipeline mean."""

    stages: tuple[tuple[str, float], ...]
    total_ms: float
    repetitions: int

    def to_csv(self) -> str:
        lines = ["stage,mean_ms"]
        lines.extend(f"{name},{ms:.6f}" for name, ms in self.stages)
        lines.append(f"Total,{self.total_ms:.6f}")
        return "\n".join(lines) + "\n"

    def stage_ms(self, name: str) -> float:
        for stage, ms in self.stages:
            if stage == name:
                return ms
        raise KeyError(name)


def bench(
    img: Image,
    repetitions: int = 100,
    warmups: int = 10,
    config: DescriptorConfig = DEFAULT_CONFIG,
    window: int = DEFAULT_NMS_WINDOW,
) -> BenchReport:
    """Time each extraction stage over repeated single-threaded runs.

    Warm-up runs (excluded from the means) absorb compilation and cache
    effects. The total is measured around each whole repetition, so the
    stage means can only undershoot it by the timer-call overhead.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    for _ in range(warmups):
        _timed_extract(img, config, window)
    stage_acc = np.zeros(len(STAGE_NAMES), dtype=np.float64)
    total_acc = 0.0
    for _ in range(repetitions):
        stage_s, total_s = _timed_extract(img, config, window)
        stage_acc += stage_s
        total_acc += total_s
    stage_ms = stage_acc / repetitions * 1e3
    return BenchReport(
        stages=tuple(zip(STAGE_NAMES, stage_ms.tolist())),
        total_ms=total_acc / repetitions * 1e3,
        repetitions=repetitions,
    )


def _timed_extract(img: Image, config: DescriptorConfig, window: int):
    """One fully staged extraction; returns (per-stage seconds, total)."""
    clock = time.perf_counter
    stage_s = np.empty(len(STAGE_NAMES), dtype=np.float64)
    palette_colors = np.array(DEFAULT_PALETTE.colors, dtype=np.float64)
    started = clock()

    t0 = clock()
    indices = _dither_kernel(
        img.pixels.astype(np.float64), palette_colors, DEFAULT_COEFFICIENTS.table,
        DEFAULT_PALETTE.red_threshold, DEFAULT_PALETTE.green_threshold,
        DEFAULT_PALETTE.blue_threshold,
    )
    stage_s[0] = clock() - t0

    t0 = clock()
    grid = _grid_kernel(indices)
    stage_s[1] = clock() - t0

    t0 = clock()
    _, _, _, det = _hessian_kernel(grid)
    stage_s[2] = clock() - t0

    t0 = clock()
    thr = _threshold_kernel(grid)
    strength = np.abs(det)
    js, is_ = np.nonzero(strength > thr)
    picked = strength[js, is_]
    stage_s[3] = clock() - t0

    t0 = clock()
    if js.size:
        keep = _nms_kernel(js, is_, picked, grid.shape[0], grid.shape[1], window)
        js, is_ = js[keep], is_[keep]
    stage_s[4] = clock() - t0
    n = js.size

    t0 = clock()
    if n:
        xy = np.empty((n, 2), dtype=np.float64)
        xy[:, 0] = 2 * is_ + 1
        xy[:, 1] = 2 * js + 1
        x_c, y_c = _centroid(xy)
    stage_s[5] = clock() - t0

    t0 = clock()
    if n:
        d2 = _squared_distances(xy, x_c, y_c)
    stage_s[6] = clock() - t0

    t0 = clock()
    if n:
        b_d = _assign_distance_bins(d2, _distance_bin_edges(float(d2.max()), config.k_d))
    stage_s[7] = clock() - t0

    t0 = clock()
    if n:
        slope = _fit_slope(xy, x_c, y_c)
    stage_s[8] = clock() - t0

    t0 = clock()
    if n:
        theta0 = _resolve_theta0(xy, x_c, y_c, slope)
    stage_s[9] = clock() - t0

    t0 = clock()
    if n:
        b_a = _assign_angle_bins(xy, x_c, y_c, theta0, config.k_a)
    stage_s[10] = clock() - t0

    t0 = clock()
    if n:
        values = _accumulate(b_d, b_a, grid[js, is_].astype(np.int64), config)
    else:
        values = np.zeros(config.length, dtype=np.float64)
    if config.normalize:
        values = _l1_normalize(values)
    stage_s[11] = clock() - t0

    return stage_s, clock() - started
