"""Spatial-chromatic histogram descriptor built from salient patterns.

Each salient pattern contributes its centroid-distance bin, its angle bin
relative to the dominant orientation of the point cloud, and all four of
its colour indices (so each pattern adds 4 to the unnormalized histogram
mass). Distances stay squared throughout; no square root is taken. The
flat layout is distance-major: cell(B_d, B_a, c) lives at index
B_d*k_a*k_c + B_a*k_c + (c - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dithering import dither
from .imaging import Image
from .patterns import build_grid
from .saliency import DEFAULT_NMS_WINDOW, SdpfPoint, salient_cells


@dataclass(frozen=True)
class DescriptorConfig:
    """Histogram shape: distance, angle and colour bin counts."""

    k_d: int = 4
    k_a: int = 8
    k_c: int = 8
    normalize: bool = True

    def __post_init__(self):
        for name in ("k_d", "k_a", "k_c"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def length(self) -> int:
        return self.k_d * self.k_a * self.k_c


DEFAULT_CONFIG = DescriptorConfig()


@dataclass(frozen=True)
class OrientationFrame:
    """Centroid, best-fit slope and starting angle of a salient point set.

    slope is math.inf when the fitted line is vertical; theta0 lies in
    [0, 360).
    """

    x_c: float
    y_c: float
    slope: float
    theta0: float

    @property
    def vertical(self) -> bool:
        return math.isinf(self.slope)


@dataclass(frozen=True)
class SdpfDescriptor:
    """Flat nonnegative histogram of length k_d * k_a * k_c."""

    values: np.ndarray
    k_d: int
    k_a: int
    k_c: int
    normalized: bool

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if vals.ndim != 1 or vals.size != self.k_d * self.k_a * self.k_c:
            raise ValueError(
                f"descriptor must be a flat vector of length "
                f"{self.k_d * self.k_a * self.k_c}, got shape {np.shape(self.values)}"
            )
        if vals.size and vals.min() < 0:
            raise ValueError("descriptor values must be nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size

    def cell(self, b_d: int, b_a: int, color: int) -> float:
        """Value of the (distance bin, angle bin, colour index) cell."""
        return float(self.values[b_d * self.k_a * self.k_c + b_a * self.k_c + (color - 1)])


def point_coordinates(points) -> np.ndarray:
    """(n, 2) float array of (x, y) from SdpfPoints or coordinate pairs."""
    seq = list(points)
    if not seq:
        return np.empty((0, 2), dtype=np.float64)
    if isinstance(seq[0], SdpfPoint):
        return np.array([(p.x, p.y) for p in seq], dtype=np.float64)
    xy = np.asarray(seq, dtype=np.float64)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise ValueError(f"expected (n, 2) coordinates, got shape {xy.shape}")
    return xy


def centroid(points) -> tuple[float, float]:
    """Arithmetic mean of the point coordinates."""
    xy = point_coordinates(points)
    if xy.shape[0] == 0:
        raise ValueError("centroid of an empty point set is undefined")
    return _centroid(xy)


def distance_bins(points, center: tuple[float, float], k_d: int) -> np.ndarray:
    """Per-point distance bin in 0..k_d-1, from squared distances only.

    Bin upper boundaries split [0, max squared distance] into k_d equal
    ranges; a point lands in the first bin whose boundary its squared
    distance does not exceed, zero distance in bin 0, the maximum in the
    last bin. All points coincident puts every point in bin 0.
    """
    xy = point_coordinates(points)
    if xy.shape[0] == 0:
        raise ValueError("cannot bin an empty point set")
    d2 = _squared_distances(xy, center[0], center[1])
    return _assign_distance_bins(d2, _distance_bin_edges(float(d2.max()), k_d))


def dominant_orientation(points, center: tuple[float, float] | None = None) -> OrientationFrame:
    """Least-squares slope through the points plus the starting angle.

    The starting angle is atan(slope) when at least as many points lie on
    side 1 of the perpendicular through the centroid as on side 2, else
    atan(slope) - 180 degrees, wrapped into [0, 360).
    """
    xy = point_coordinates(points)
    if xy.shape[0] == 0:
        raise ValueError("cannot orient an empty point set")
    x_c, y_c = _centroid(xy) if center is None else (float(center[0]), float(center[1]))
    slope = _fit_slope(xy, x_c, y_c)
    theta0 = _resolve_theta0(xy, x_c, y_c, slope)
    return OrientationFrame(x_c=x_c, y_c=y_c, slope=slope, theta0=theta0)


def angle_bins(points, frame: OrientationFrame, k_a: int) -> np.ndarray:
    """Per-point angle bin in 0..k_a-1 relative to the starting angle."""
    xy = point_coordinates(points)
    return _assign_angle_bins(xy, frame.x_c, frame.y_c, frame.theta0, k_a)


def build_descriptor(
    points: Sequence[SdpfPoint],
    b_d: np.ndarray,
    b_a: np.ndarray,
    config: DescriptorConfig = DEFAULT_CONFIG,
) -> SdpfDescriptor:
    """Accumulate binned points into the histogram, one count per colour."""
    points = list(points)
    b_d = np.asarray(b_d, dtype=np.int64)
    b_a = np.asarray(b_a, dtype=np.int64)
    if not (len(points) == b_d.size == b_a.size):
        raise ValueError("points, distance bins and angle bins must align")
    if points:
        colors = np.array([p.pattern.colors for p in points], dtype=np.int64)
        values = _accumulate(b_d, b_a, colors, config)
    else:
        values = np.zeros(config.length, dtype=np.float64)
    if config.normalize:
        values = _l1_normalize(values)
    return SdpfDescriptor(
        values=values, k_d=config.k_d, k_a=config.k_a, k_c=config.k_c,
        normalized=config.normalize,
    )


@dataclass(frozen=True)
class ExtractionResult:
    """Descriptor plus the intermediates the overlay renderer needs."""

    descriptor: SdpfDescriptor
    points: list[SdpfPoint]
    frame: OrientationFrame | None


def extract(
    img: Image,
    config: DescriptorConfig = DEFAULT_CONFIG,
    window: int = DEFAULT_NMS_WINDOW,
) -> SdpfDescriptor:
    """Full pipeline: dither, grid, saliency, geometry, histogram.

    Deterministic; an image with no salient patterns yields the zero
    vector.
    """
    js, is_, colors = _salient_arrays(img, window)
    values = _histogram_from_cells(js, is_, colors, config)
    return SdpfDescriptor(
        values=values, k_d=config.k_d, k_a=config.k_a, k_c=config.k_c,
        normalized=config.normalize,
    )


def extract_detailed(
    img: Image,
    config: DescriptorConfig = DEFAULT_CONFIG,
    window: int = DEFAULT_NMS_WINDOW,
) -> ExtractionResult:
    """extract plus the salient points and orientation frame."""
    _require_size(img)
    grid = build_grid(dither(img))
    js, is_, strengths = salient_cells(grid.patterns, window)
    colors = grid.patterns[js, is_].astype(np.int64)
    values = _histogram_from_cells(js, is_, colors, config)
    desc = SdpfDescriptor(
        values=values, k_d=config.k_d, k_a=config.k_a, k_c=config.k_c,
        normalized=config.normalize,
    )
    points = [
        SdpfPoint(
            i=int(i), j=int(j), x=2 * int(i) + 1, y=2 * int(j) + 1,
            strength=float(s), pattern=grid.pattern(int(i), int(j)),
        )
        for j, i, s in zip(js, is_, strengths)
    ]
    frame = dominant_orientation(points) if points else None
    return ExtractionResult(descriptor=desc, points=points, frame=frame)


def _require_size(img: Image):
    if img.width < 6 or img.height < 6:
        raise ValueError(
            f"image must be at least 6x6 pixels for salient-pattern "
            f"extraction, got {img.width}x{img.height}"
        )


def _salient_arrays(img: Image, window: int):
    _require_size(img)
    grid = build_grid(dither(img))
    js, is_, _ = salient_cells(grid.patterns, window)
    return js, is_, grid.patterns[js, is_].astype(np.int64)


def _histogram_from_cells(js, is_, colors, config: DescriptorConfig) -> np.ndarray:
    if js.size == 0:
        return np.zeros(config.length, dtype=np.float64)
    xy = np.empty((js.size, 2), dtype=np.float64)
    xy[:, 0] = 2 * is_ + 1
    xy[:, 1] = 2 * js + 1
    x_c, y_c = _centroid(xy)
    d2 = _squared_distances(xy, x_c, y_c)
    b_d = _assign_distance_bins(d2, _distance_bin_edges(float(d2.max()), config.k_d))
    slope = _fit_slope(xy, x_c, y_c)
    theta0 = _resolve_theta0(xy, x_c, y_c, slope)
    b_a = _assign_angle_bins(xy, x_c, y_c, theta0, config.k_a)
    values = _accumulate(b_d, b_a, colors, config)
    if config.normalize:
        values = _l1_normalize(values)
    return values


def _centroid(xy: np.ndarray) -> tuple[float, float]:
    return float(xy[:, 0].mean()), float(xy[:, 1].mean())


def _squared_distances(xy: np.ndarray, x_c: float, y_c: float) -> np.ndarray:
    dx = xy[:, 0] - x_c
    dy = xy[:, 1] - y_c
    return dx * dx + dy * dy


def _distance_bin_edges(d2_max: float, k_d: int) -> np.ndarray:
    """Upper boundaries of the k_d equal ranges of [0, d2_max]."""
    return d2_max * (np.arange(1, k_d + 1, dtype=np.float64) / k_d)


def _assign_distance_bins(d2: np.ndarray, edges: np.ndarray) -> np.ndarray:
    if edges[-1] == 0.0:
        return np.zeros(d2.size, dtype=np.int64)
    bins = np.searchsorted(edges, d2, side="left")
    return np.minimum(bins, edges.size - 1).astype(np.int64)


def _fit_slope(xy: np.ndarray, x_c: float, y_c: float) -> float:
    dx = xy[:, 0] - x_c
    denom = float((dx * dx).sum())
    if denom == 0.0:
        return math.inf
    return float((dx * (xy[:, 1] - y_c)).sum() / denom)


def _resolve_theta0(xy: np.ndarray, x_c: float, y_c: float, slope: float) -> float:
    """Pick the starting angle branch from the side populations.

    Sides are taken about the perpendicular of the fitted line through the
    centroid. A vertical fit makes that perpendicular horizontal (sides by
    the sign of y - y_c); a zero slope makes it vertical (sides by the
    sign of x - x_c). Points exactly on the perpendicular count for
    neither side. Equal populations take the first branch.
    """
    if math.isinf(slope):
        base = 90.0
        side = xy[:, 1] - y_c
    elif slope == 0.0:
        base = 0.0
        side = xy[:, 0] - x_c
    else:
        base = math.degrees(math.atan(slope))
        side = xy[:, 1] + (xy[:, 0] - x_c) / slope - y_c
    u1 = int(np.count_nonzero(side > 0))
    u2 = int(np.count_nonzero(side < 0))
    theta0 = base if u1 >= u2 else base - 180.0
    theta0 %= 360.0
    # float modulo may round up to exactly 360
    return 0.0 if theta0 >= 360.0 else theta0


def _assign_angle_bins(
    xy: np.ndarray, x_c: float, y_c: float, theta0: float, k_a: int
) -> np.ndarray:
    angles = np.degrees(np.arctan2(xy[:, 1] - y_c, xy[:, 0] - x_c))
    relative = np.mod(np.mod(angles, 360.0) - theta0, 360.0)
    bins = np.floor(relative / (360.0 / k_a)).astype(np.int64)
    return np.minimum(bins, k_a - 1)


def _accumulate(b_d: np.ndarray, b_a: np.ndarray, colors: np.ndarray, config: DescriptorConfig) -> np.ndarray:
    if colors.size and int(colors.max()) > config.k_c:
        raise ValueError(
            f"colour index {int(colors.max())} exceeds k_c={config.k_c}; "
            f"k_c must cover the palette"
        )
    base = (b_d * config.k_a + b_a) * config.k_c
    flat = (base[:, None] + (colors - 1)).ravel()
    return np.bincount(flat, minlength=config.length).astype(np.float64)


def _l1_normalize(values: np.ndarray) -> np.ndarray:
    total = values.sum()
    return values / total if total > 0 else values


def write_descriptors_csv(path, rows, config: DescriptorConfig = DEFAULT_CONFIG):
    """Write labeled descriptors as CSV.

    Header `SDPF1,<k_d>,<k_a>,<k_c>,<normalized:0|1>`, then one line per
    image: path, label, then the vector at 9 significant digits. Labels
    must not contain commas; paths may (they are re-joined on read).
    """
    lines = [f"SDPF1,{config.k_d},{config.k_a},{config.k_c},{int(config.normalize)}"]
    for image_path, label, values in rows:
        label = str(label)
        if "," in label or "\n" in label:
            raise ValueError(f"label {label!r} cannot be serialized")
        values = np.asarray(values, dtype=np.float64)
        if values.size != config.length:
            raise ValueError(
                f"descriptor for {image_path} has length {values.size}, "
                f"expected {config.length}"
            )
        cells = [str(image_path), label] + [f"{v:.9g}" for v in values]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_descriptors_csv(path) -> tuple[DescriptorConfig, list[tuple[str, str, np.ndarray]]]:
    """Read a descriptor CSV back as (config, [(path, label, values), ...])."""
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines or not lines[0].startswith("SDPF1,"):
        raise ValueError(f"{path}: not a descriptor file (missing SDPF1 header)")
    head = lines[0].split(",")
    if len(head) != 5:
        raise ValueError(f"{path}: malformed header")
    config = DescriptorConfig(
        k_d=int(head[1]), k_a=int(head[2]), k_c=int(head[3]),
        normalize=bool(int(head[4])),
    )
    rows = []
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) < config.length + 2:
            raise ValueError(f"{path}: line {n} holds fewer than {config.length + 2} fields")
        values = np.array([float(v) for v in parts[-config.length:]], dtype=np.float64)
        label = parts[-config.length - 1]
        image_path = ",".join(parts[: -config.length - 1])
        rows.append((image_path, label, values))
    return config, rows
