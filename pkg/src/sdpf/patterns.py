"""Dither patterns: non-overlapping 2x2 blocks of colour indices.

The indexed image is tiled into 2x2 blocks aligned to even pixel
coordinates (a trailing odd row or column is dropped), and each block's
four indices are sorted ascending so permutations of the same colours
compare equal. Dissimilarity between two patterns is the number of sorted
positions that differ, an integer in 0..4.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Iterable

import numpy as np
from numba import njit

from .dithering import IndexedImage


def sort_block(a, b, c, d):
    """Sort four colour indices ascending with at most six comparisons."""
    if b < a:
        a, b = b, a
    if c < b:
        b, c = c, b
        if b < a:
            a, b = b, a
    if d < c:
        c, d = d, c
        if c < b:
            b, c = c, b
            if b < a:
                a, b = b, a
    return a, b, c, d


@dataclass(frozen=True)
class DitherPattern:
    """Canonical (sorted) 2x2 pattern of colour indices."""

    colors: tuple[int, int, int, int]

    def __post_init__(self):
        if len(self.colors) != 4:
            raise ValueError("a pattern holds exactly 4 colour indices")
        if any(not 1 <= c <= 8 for c in self.colors):
            raise ValueError(f"colour indices must lie in 1..8, got {self.colors}")
        if any(self.colors[k] > self.colors[k + 1] for k in range(3)):
            raise ValueError(f"colour indices must be sorted ascending, got {self.colors}")

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> DitherPattern:
        """Build the canonical pattern from four indices in any order."""
        vals = [int(v) for v in indices]
        if len(vals) != 4:
            raise ValueError("a pattern holds exactly 4 colour indices")
        return cls(sort_block(*vals))

    def dissimilarity(self, other: DitherPattern) -> int:
        return dissimilarity(self, other)


def dissimilarity(a: DitherPattern, b: DitherPattern) -> int:
    """Count of positions where the sorted colour indices differ."""
    return sum(1 for x, y in zip(a.colors, b.colors) if x != y)


def canonical_patterns() -> list[DitherPattern]:
    """All 330 canonical patterns (multisets of 4 indices from 1..8)."""
    return [DitherPattern(c) for c in combinations_with_replacement(range(1, 9), 4)]


@dataclass(frozen=True)
class PatternGrid:
    """Grid of canonical patterns, one per 2x2 pixel block.

    ``patterns[j, i]`` is the sorted index quadruple of the block whose
    top-left pixel is (2i, 2j); i runs horizontally, j vertically.
    """

    patterns: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.patterns, dtype=np.uint8))
        if arr.ndim != 3 or arr.shape[2] != 4:
            raise ValueError(f"expected shape (rows, cols, 4), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("pattern grid must hold at least one pattern")
        arr.setflags(write=False)
        object.__setattr__(self, "patterns", arr)

    @property
    def grid_width(self) -> int:
        return self.patterns.shape[1]

    @property
    def grid_height(self) -> int:
        return self.patterns.shape[0]

    def pattern(self, i: int, j: int) -> DitherPattern:
        """Pattern at grid column i, row j."""
        quad = self.patterns[j, i]
        return DitherPattern((int(quad[0]), int(quad[1]), int(quad[2]), int(quad[3])))


def build_grid(indexed: IndexedImage) -> PatternGrid:
    """Tile the indexed image into canonical 2x2 patterns."""
    if indexed.width < 2 or indexed.height < 2:
        raise ValueError(
            f"image must be at least 2x2 pixels to form patterns, got "
            f"{indexed.width}x{indexed.height}"
        )
    return PatternGrid(_grid_kernel(indexed.indices))


@njit(cache=True)
def _grid_kernel(indices):
    gh = indices.shape[0] // 2
    gw = indices.shape[1] // 2
    out = np.empty((gh, gw, 4), np.uint8)
    for gy in range(gh):
        for gx in range(gw):
            a = indices[2 * gy, 2 * gx]
            b = indices[2 * gy, 2 * gx + 1]
            c = indices[2 * gy + 1, 2 * gx]
            d = indices[2 * gy + 1, 2 * gx + 1]
            if b < a:
                a, b = b, a
            if c < b:
                b, c = c, b
                if b < a:
                    a, b = b, a
            if d < c:
                c, d = d, c
                if c < b:
                    b, c = c, b
                    if b < a:
                        a, b = b, a
            out[gy, gx, 0] = a
            out[gy, gx, 1] = b
            out[gy, gx, 2] = c
            out[gy, gx, 3] = d
    return out


@njit(cache=True, inline="always")
def _cell_dissim(grid, j0, i0, j1, i1):
    n = 0
    for k in range(4):
        if grid[j0, i0, k] != grid[j1, i1, k]:
            n += 1
    return n
