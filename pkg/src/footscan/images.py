"""Decoded raster images and the PNG boundary.

Uploads travel as PNG; everything past the service boundary works on
RasterImage, a plain row-major RGB byte buffer, so the detector never
touches an encoder library.
"""

from __future__ import annotations

import io
import struct
import zlib
from dataclasses import dataclass

from PIL import Image, UnidentifiedImageError

from .errors import BadImage


@dataclass(frozen=True)
class RasterImage:
    width: int
    height: int
    pixels: bytes  # row-major RGB triples, len == 3 * width * height

    def __post_init__(self) -> None:
        if self.width < 0 or self.height < 0:
            raise ValueError("image dimensions must be >= 0")
        if len(self.pixels) != 3 * self.width * self.height:
            raise ValueError("pixel buffer length != 3 * width * height")

    def pixel(self, x: int, y: int) -> tuple[int, int, int]:
        i = 3 * (y * self.width + x)
        return self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]


def decode_png(data: bytes) -> RasterImage:
    """Decode PNG bytes into an RGB raster; any other format is rejected."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            if img.format != "PNG":
                raise BadImage(f"expected PNG, got {img.format}")
            rgb = img.convert("RGB")
            return RasterImage(width=rgb.width, height=rgb.height,
                               pixels=rgb.tobytes())
    except BadImage:
        raise
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise BadImage(f"not a decodable PNG: {exc}") from exc


def encode_png(image: RasterImage) -> bytes:
    img = Image.frombytes("RGB", (image.width, image.height), image.pixels)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def pad_png_to_size(png: bytes, total_size: int) -> bytes:
    """Grow a PNG to an exact byte size by inserting a tEXt chunk.

    Decoders ignore the padding chunk, so pixel content is unchanged.
    Useful for reproducing realistic upload sizes in tests and demos.
    """
    if total_size == len(png):
        return png
    # chunk overhead: 4 length + 4 type + 4 crc, payload needs "pad\0" + fill
    extra = total_size - len(png) - 12
    if extra < 4:
        raise ValueError(
            f"target {total_size} too small: base PNG is {len(png)} bytes")
    payload = b"pad\x00" + b"\x00" * (extra - 4)
    chunk = struct.pack(">I", len(payload)) + b"tEXt" + payload
    chunk += struct.pack(">I", zlib.crc32(b"tEXt" + payload) & 0xFFFFFFFF)
    # insert ahead of the closing IEND chunk
    iend = png.rfind(b"IEND")
    if iend < 4:
        raise ValueError("input is not a complete PNG")
    cut = iend - 4
    return png[:cut] + chunk + png[cut:]
