"""Salient dither pattern detection over the pattern grid.

Each interior pattern gets a Hessian-style response assembled from the
dissimilarities to its grid neighbours; the absolute determinant is the
pattern's strength. A pattern becomes a candidate when its strength
strictly exceeds an empirical threshold: the summed dissimilarity of the
eight consecutive cell pairs walking once around its 3x3 ring. Windowed
non-maximal suppression then keeps a candidate only if no candidate in
the window is stronger (equal strengths all survive).

Border patterns (grid edge rows and columns) need neighbours that do not
exist, so they are never candidates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .patterns import DitherPattern, PatternGrid

#: Side length, in patterns, of the suppression window.
DEFAULT_NMS_WINDOW = 5


@dataclass(frozen=True)
class HessianResponse:
    """Per-pattern second-derivative response; zero on the grid border."""

    lxx: np.ndarray
    lyy: np.ndarray
    lxy: np.ndarray
    det: np.ndarray
    strength: np.ndarray


@dataclass(frozen=True, slots=True)
class SdpfPoint:
    """A salient pattern: grid cell, pixel center, strength, colours.

    (x, y) is the geometric center of the 2x2 pixel block in a frame where
    pixel (0, 0) spans the unit square, hence x = 2i + 1 and y = 2j + 1.
    """

    i: int
    j: int
    x: int
    y: int
    strength: float
    pattern: DitherPattern


def hessian_response(grid: PatternGrid) -> HessianResponse:
    """Assemble the Hessian response arrays for every interior pattern."""
    _require_interior(grid)
    lxx, lyy, lxy, det = _hessian_kernel(grid.patterns)
    return HessianResponse(lxx=lxx, lyy=lyy, lxy=lxy, det=det, strength=np.abs(det))


def threshold_candidates(resp: HessianResponse, grid: PatternGrid) -> list[SdpfPoint]:
    """Candidate set: patterns whose strength strictly exceeds the ring sum."""
    thr = _threshold_kernel(grid.patterns)
    js, is_ = np.nonzero(resp.strength > thr)
    return _make_points(grid, js, is_, resp.strength[js, is_])


def non_max_suppress(points: list[SdpfPoint], window: int = DEFAULT_NMS_WINDOW) -> list[SdpfPoint]:
    """Drop every candidate that a strictly stronger candidate overlooks.

    A point survives iff its strength is >= that of every candidate in the
    window x window block of grid cells centered on it, so tied maxima all
    survive. Only the given candidates compete; other grid cells are
    irrelevant.
    """
    _require_odd_window(window)
    if not points:
        return []
    js = np.array([p.j for p in points], dtype=np.int64)
    is_ = np.array([p.i for p in points], dtype=np.int64)
    strengths = np.array([p.strength for p in points], dtype=np.float64)
    keep = _nms_kernel(js, is_, strengths, int(js.max()) + 1, int(is_.max()) + 1, window)
    return [p for p, k in zip(points, keep) if k]


def detect(grid: PatternGrid, window: int = DEFAULT_NMS_WINDOW) -> list[SdpfPoint]:
    """Full detection: Hessian response, ring threshold, suppression."""
    _require_interior(grid)
    _require_odd_window(window)
    js, is_, strengths = salient_cells(grid.patterns, window)
    return _make_points(grid, js, is_, strengths)


def salient_cells(patterns: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Array form of detect: (j, i, strength) per surviving pattern.

    The fast path shared by the descriptor pipeline; raster (j, then i)
    order.
    """
    _, _, _, det = _hessian_kernel(patterns)
    thr = _threshold_kernel(patterns)
    strength = np.abs(det)
    js, is_ = np.nonzero(strength > thr)
    if js.size == 0:
        return js, is_, strength[js, is_]
    picked = strength[js, is_]
    keep = _nms_kernel(js, is_, picked, patterns.shape[0], patterns.shape[1], window)
    return js[keep], is_[keep], picked[keep]


def _make_points(grid: PatternGrid, js, is_, strengths) -> list[SdpfPoint]:
    return [
        SdpfPoint(
            i=int(i),
            j=int(j),
            x=2 * int(i) + 1,
            y=2 * int(j) + 1,
            strength=float(s),
            pattern=grid.pattern(int(i), int(j)),
        )
        for j, i, s in zip(js, is_, strengths)
    ]


def _require_interior(grid: PatternGrid):
    if grid.grid_width < 3 or grid.grid_height < 3:
        raise ValueError(
            f"pattern grid must be at least 3x3 to have interior patterns, got "
            f"{grid.grid_width}x{grid.grid_height}"
        )


def _require_odd_window(window: int):
    if window < 1 or window % 2 == 0:
        raise ValueError(f"suppression window must be odd and >= 1, got {window}")


@njit(cache=True, inline="always")
def _dissim(grid, j0, i0, j1, i1):
    n = 0
    for k in range(4):
        if grid[j0, i0, k] != grid[j1, i1, k]:
            n += 1
    return n


@njit(cache=True)
def _hessian_kernel(grid):
    gh, gw = grid.shape[0], grid.shape[1]
    lxx = np.zeros((gh, gw), np.float64)
    lyy = np.zeros((gh, gw), np.float64)
    lxy = np.zeros((gh, gw), np.float64)
    det = np.zeros((gh, gw), np.float64)
    for j in range(1, gh - 1):
        for i in range(1, gw - 1):
            xx = _dissim(grid, j, i - 1, j, i) + _dissim(grid, j, i, j, i + 1)
            yy = _dissim(grid, j - 1, i, j, i) + _dissim(grid, j, i, j + 1, i)
            # The fourth diagonal pair reuses the bottom-right neighbour
            # instead of mirroring the third; kept as designed.
            xy = 0.25 * (
                _dissim(grid, j - 1, i - 1, j + 1, i - 1)
                + _dissim(grid, j - 1, i + 1, j + 1, i + 1)
                + _dissim(grid, j - 1, i - 1, j + 1, i + 1)
                + _dissim(grid, j + 1, i - 1, j + 1, i + 1)
            )
            lxx[j, i] = xx
            lyy[j, i] = yy
            lxy[j, i] = xy
            det[j, i] = xx * yy - xy * xy
    return lxx, lyy, lxy, det


@njit(cache=True)
def _threshold_kernel(grid):
    gh, gw = grid.shape[0], grid.shape[1]
    thr = np.zeros((gh, gw), np.float64)
    for j in range(1, gh - 1):
        for i in range(1, gw - 1):
            # One full walk around the 3x3 ring, eight consecutive pairs.
            thr[j, i] = (
                _dissim(grid, j - 1, i - 1, j - 1, i)
                + _dissim(grid, j - 1, i, j - 1, i + 1)
                + _dissim(grid, j - 1, i + 1, j, i + 1)
                + _dissim(grid, j, i + 1, j + 1, i + 1)
                + _dissim(grid, j + 1, i + 1, j + 1, i)
                + _dissim(grid, j + 1, i, j + 1, i - 1)
                + _dissim(grid, j + 1, i - 1, j, i - 1)
                + _dissim(grid, j, i - 1, j - 1, i - 1)
            )
    return thr


@njit(cache=True)
def _nms_kernel(js, is_, strengths, gh, gw, window):
    half = window // 2
    smap = np.full((gh, gw), -np.inf)
    for k in range(len(js)):
        if strengths[k] > smap[js[k], is_[k]]:
            smap[js[k], is_[k]] = strengths[k]
    keep = np.empty(len(js), np.bool_)
    for k in range(len(js)):
        j, i, s = js[k], is_[k], strengths[k]
        j0 = max(0, j - half)
        j1 = min(gh - 1, j + half)
        i0 = max(0, i - half)
        i1 = min(gw - 1, i + half)
        ok = True
        for jj in range(j0, j1 + 1):
            for ii in range(i0, i1 + 1):
                if smap[jj, ii] > s:
                    ok = False
                    break
            if not ok:
                break
        keep[k] = ok
    return keep
