"""Error-diffusion colour dithering over the eight corners of the RGB cube.

Pixels are visited in raster order (left to right, top to bottom). Each pixel
is quantized to the nearest cube corner through a three-comparison binary
search (one threshold test per channel), and the quantization error is
diffused to the three neighbours that have not been visited yet: right,
bottom and bottom-left. Error destined for neighbours outside the image is
dropped. Errors accumulate unclamped in a signed working buffer, so channel
values seen by the quantizer may lie well outside [0, 255].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .imaging import Image

#: Midpoint of the [0, 255] channel range. Values equal to the threshold take
#: the bright branch.
CHANNEL_MIDPOINT = 127.5

#: Floyd-Steinberg weights restricted to the (right, bottom, bottom-left)
#: neighbour set and renormalized to sum to 1.
DEFAULT_WEIGHTS = (7.0 / 15.0, 5.0 / 15.0, 3.0 / 15.0)


@dataclass(frozen=True)
class DitherPalette:
    """The eight dither colours and the per-channel quantizer thresholds.

    Colour index ``i`` (1..8) encodes the three threshold decisions as bits:
    index = 1 + 4*(R high) + 2*(G high) + 1*(B high). With the default corner
    palette that makes index 1 black and index 8 white.
    """

    colors: tuple[tuple[int, int, int], ...]
    red_threshold: float = CHANNEL_MIDPOINT
    green_threshold: float = CHANNEL_MIDPOINT
    blue_threshold: float = CHANNEL_MIDPOINT

    def __post_init__(self):
        if len(self.colors) != 8:
            raise ValueError(f"palette must hold exactly 8 colours, got {len(self.colors)}")

    @classmethod
    def rgb_corners(cls) -> DitherPalette:
        """The canonical palette: corners of the RGB cube in index order."""
        corners = tuple(
            (255 * (bits >> 2 & 1), 255 * (bits >> 1 & 1), 255 * (bits & 1))
            for bits in range(8)
        )
        return cls(colors=corners)

    def color(self, index: int) -> tuple[int, int, int]:
        return self.colors[index - 1]


DEFAULT_PALETTE = DitherPalette.rgb_corners()


@dataclass(frozen=True)
class CoefficientProvider:
    """Maps a pixel's pre-quantization value to diffusion weights.

    ``table`` has one (right, bottom, bottom_left) row per 8-bit level; a
    pixel selects its row by the rounded mean of its working channel values,
    clamped to 0..255. Every row must sum to 1 so the diffused error mass
    equals the quantization error. Input-dependent coefficient tables (one
    row per level) plug in here without code changes.
    """

    table: np.ndarray

    def __post_init__(self):
        table = np.ascontiguousarray(np.asarray(self.table, dtype=np.float64))
        if table.shape != (256, 3):
            raise ValueError(f"coefficient table must have shape (256, 3), got {table.shape}")
        if (table < 0.0).any():
            raise ValueError("diffusion weights must be nonnegative")
        sums = table.sum(axis=1)
        if np.abs(sums - 1.0).max() > 1e-9:
            raise ValueError("each coefficient row must sum to 1 (within 1e-9)")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def constant(cls, right: float, bottom: float, bottom_left: float) -> CoefficientProvider:
        return cls(np.tile(np.array([right, bottom, bottom_left]), (256, 1)))

    def weights(self, r: float, g: float, b: float) -> tuple[float, float, float]:
        """Weights for a pixel whose working value is (r, g, b)."""
        row = self.table[table_key(r, g, b)]
        return float(row[0]), float(row[1]), float(row[2])


DEFAULT_COEFFICIENTS = CoefficientProvider.constant(*DEFAULT_WEIGHTS)


def table_key(r: float, g: float, b: float) -> int:
    """Coefficient-table row for a (possibly out-of-range) working pixel."""
    key = int((r + g + b) / 3.0 + 0.5)
    return min(255, max(0, key))


@dataclass(frozen=True)
class IndexedImage:
    """A width x height grid of dither colour indices in 1..8."""

    indices: np.ndarray

    def __post_init__(self):
        idx = np.ascontiguousarray(np.asarray(self.indices, dtype=np.uint8))
        if idx.ndim != 2:
            raise ValueError(f"expected a 2-d index grid, got shape {idx.shape}")
        if idx.size and (idx.min() < 1 or idx.max() > 8):
            raise ValueError("colour indices must lie in 1..8")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def width(self) -> int:
        return self.indices.shape[1]

    @property
    def height(self) -> int:
        return self.indices.shape[0]


def quantize_pixel(pixel, palette: DitherPalette = DEFAULT_PALETTE) -> int:
    """Quantize one (possibly error-accumulated) RGB value to a colour index.

    Exactly three threshold comparisons, one per channel; a channel equal to
    its threshold takes the high branch. For the corner palette this returns
    the Euclidean-nearest corner.
    """
    r, g, b = pixel
    index = 1
    if r >= palette.red_threshold:
        index += 4
    if g >= palette.green_threshold:
        index += 2
    if b >= palette.blue_threshold:
        index += 1
    return index


def dither(
    img: Image,
    palette: DitherPalette = DEFAULT_PALETTE,
    coefficients: CoefficientProvider = DEFAULT_COEFFICIENTS,
) -> IndexedImage:
    """Dither an image to the eight-colour palette.

    Deterministic: identical inputs give identical index grids.
    """
    indices = _dither_kernel(
        img.pixels.astype(np.float64),
        np.array(palette.colors, dtype=np.float64),
        coefficients.table,
        palette.red_threshold,
        palette.green_threshold,
        palette.blue_threshold,
    )
    return IndexedImage(indices)


def indexed_to_image(indexed: IndexedImage, palette: DitherPalette = DEFAULT_PALETTE) -> Image:
    """Map colour indices back to palette RGB values."""
    lut = np.array(palette.colors, dtype=np.uint8)
    return Image(lut[indexed.indices.astype(np.intp) - 1])


@njit(cache=True)
def _dither_kernel(pixels, colors, table, r_threshold, g_threshold, b_threshold):
    height, width = pixels.shape[0], pixels.shape[1]
    work = pixels.copy()
    out = np.empty((height, width), np.uint8)
    for y in range(height):
        for x in range(width):
            r = work[y, x, 0]
            g = work[y, x, 1]
            b = work[y, x, 2]

            index = 1
            if r >= r_threshold:
                index += 4
            if g >= g_threshold:
                index += 2
            if b >= b_threshold:
                index += 1
            out[y, x] = index

            err_r = r - colors[index - 1, 0]
            err_g = g - colors[index - 1, 1]
            err_b = b - colors[index - 1, 2]

            key = int((r + g + b) / 3.0 + 0.5)
            if key < 0:
                key = 0
            elif key > 255:
                key = 255
            w_right = table[key, 0]
            w_bottom = table[key, 1]
            w_bottom_left = table[key, 2]

            if x + 1 < width:
                work[y, x + 1, 0] += w_right * err_r
                work[y, x + 1, 1] += w_right * err_g
                work[y, x + 1, 2] += w_right * err_b
            if y + 1 < height:
                work[y + 1, x, 0] += w_bottom * err_r
                work[y + 1, x, 1] += w_bottom * err_g
                work[y + 1, x, 2] += w_bottom * err_b
                if x - 1 >= 0:
                    work[y + 1, x - 1, 0] += w_bottom_left * err_r
                    work[y + 1, x - 1, 1] += w_bottom_left * err_g
                    work[y + 1, x - 1, 2] += w_bottom_left * err_b
    return out
