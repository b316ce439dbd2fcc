"""8-bit RGB image container with PPM (P6) file I/O, bilinear resize and
right-angle rotation.

Binary PPM is the interchange format: it is bit-exact and round-trips
losslessly. PNG is supported as well (via Pillow) for convenience.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class MalformedImageError(ValueError):
    """The file claims a supported format but its contents are broken."""


class UnsupportedImageError(ValueError):
    """The file is a recognisable image format the pipeline does not accept."""


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable 8-bit-per-channel RGB raster.

    ``pixels`` has shape (height, width, 3), dtype uint8, row-major.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (height, width, 3) pixel array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must contain at least one pixel")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer):
                raise ValueError(f"channel values must be integers, got dtype {px.dtype}")
            if px.min() < 0 or px.max() > 255:
                raise ValueError("channel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


def load_image(path: str | Path) -> Image:
    """Load an image file.

    Binary RGB PPM (P6, maxval 255) is decoded natively; PNG is decoded via
    Pillow. Raises FileNotFoundError for a missing file,
    UnsupportedImageError for formats outside that set, and
    MalformedImageError for a broken file of a supported format.
    """
    data = Path(path).read_bytes()
    if data.startswith(b"P6"):
        return _decode_ppm(data)
    if data.startswith(_PNG_SIGNATURE):
        return _decode_png(path)
    if len(data) >= 2 and data[0:1] == b"P" and data[1:2] in b"1234578":
        raise UnsupportedImageError(f"{path}: only binary RGB PPM (P6) is supported, not P{chr(data[1])}")
    raise UnsupportedImageError(f"{path}: not a PPM or PNG file")


def save_image(img: Image, path: str | Path) -> None:
    """Write ``img`` to ``path``; PNG when the suffix is .png, PPM otherwise.

    Both encodings are lossless, so load_image(save_image(img)) == img.
    """
    path = Path(path)
    if path.suffix.lower() == ".png":
        from PIL import Image as PILImage

        PILImage.fromarray(img.pixels, "RGB").save(path, format="PNG")
        return
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    path.write_bytes(header + img.pixels.tobytes())


def resize(img: Image, width: int, height: int) -> Image:
    """Bilinear resize with half-pixel-centred sampling.

    Resizing to the source dimensions returns the image unchanged.
    """
    if width < 1 or height < 1:
        raise ValueError(f"target dimensions must be positive, got {width}x{height}")
    if width == img.width and height == img.height:
        return img

    src = img.pixels.astype(np.float64)
    xs = np.clip((np.arange(width) + 0.5) * (img.width / width) - 0.5, 0.0, img.width - 1)
    ys = np.clip((np.arange(height) + 0.5) * (img.height / height) - 0.5, 0.0, img.height - 1)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    fx = (xs - x0)[np.newaxis, :, np.newaxis]
    fy = (ys - y0)[:, np.newaxis, np.newaxis]

    top = src[np.ix_(y0, x0)] * (1.0 - fx) + src[np.ix_(y0, x1)] * fx
    bottom = src[np.ix_(y1, x0)] * (1.0 - fx) + src[np.ix_(y1, x1)] * fx
    out = top * (1.0 - fy) + bottom * fy
    return Image(np.rint(out).astype(np.uint8))


def rotate90(img: Image, quarter_turns: int) -> Image:
    """Rotate by a multiple of 90 degrees (lossless index permutation)."""
    k = quarter_turns % 4
    if k == 0:
        return img
    return Image(np.ascontiguousarray(np.rot90(img.pixels, k=k, axes=(0, 1))))


def _decode_ppm(data: bytes) -> Image:
    fields, offset = _read_ppm_header(data)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedImageError(f"invalid PPM dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedImageError(f"only 8-bit PPM (maxval 255) is supported, got maxval {maxval}")
    expected = width * height * 3
    payload = data[offset : offset + expected]
    if len(payload) < expected:
        raise MalformedImageError(f"PPM pixel payload truncated: expected {expected} bytes, found {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return Image(pixels)


def _read_ppm_header(data: bytes) -> tuple[tuple[int, int, int], int]:
    """Parse "P6 <width> <height> <maxval>" allowing comments and any
    whitespace, returning the fields and the pixel-data offset."""
    pos = 2  # past the magic
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            if eol < 0:
                raise MalformedImageError("PPM header ends inside a comment")
            pos = eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise MalformedImageError(f"malformed PPM header field {token!r}")
        fields.append(int(token))
    if pos >= len(data):
        raise MalformedImageError("PPM header not followed by pixel data")
    pos += 1  # exactly one whitespace byte separates header and payload
    return (fields[0], fields[1], fields[2]), pos


def _decode_png(path: str | Path) -> Image:
    from PIL import Image as PILImage

    with PILImage.open(path) as pil:
        if pil.mode != "RGB":
            raise UnsupportedImageError(
                f"{path}: only 8-bit RGB images are accepted, got mode {pil.mode}"
            )
        return Image(np.asarray(pil, dtype=np.uint8))
