"""Synthetic foot-photo generation and detection scoring.

Stand-in imagery for demos and evaluation: skin-toned backgrounds with
planted dark-red lesions whose tight bounding boxes serve as ground truth.
Background noise is luminance-only so it can never cross the detector's
redness threshold; lesion pixels always do. That makes planted boxes exact
targets rather than approximate ones.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .domain import BoundingBox, Detection
from .detector import iou
from .images import RasterImage, encode_png, pad_png_to_size

SKIN_BASE = (228, 200, 172)      # redness 56/255 ~ 0.12 with noise margin below
LESION_BASE = (190, 42, 38)      # redness ~ 0.58, confidence saturates at 1.0


def solid_image(width: int, height: int,
                rgb: tuple[int, int, int]) -> RasterImage:
    return RasterImage(width=width, height=height,
                       pixels=bytes(rgb) * (width * height))


def plant_rect(image: RasterImage, left: int, top: int, width: int,
               height: int, rgb: tuple[int, int, int]) -> RasterImage:
    """Overwrite a rectangle of pixels; returns a new image."""
    buf = bytearray(image.pixels)
    for y in range(top, top + height):
        row = 3 * (y * image.width + left)
        buf[row:row + 3 * width] = bytes(rgb) * width
    return RasterImage(width=image.width, height=image.height,
                       pixels=bytes(buf))


def red_square_demo_image() -> RasterImage:
    """100x100 white image with a pure-red 20x20 square at (20, 30).

    The canonical smoke-test input: one detection, box (20, 30, 20, 20),
    confidence exactly 1.0.
    """
    return plant_rect(solid_image(100, 100, (255, 255, 255)),
                      left=20, top=30, width=20, height=20, rgb=(255, 0, 0))


def demo_png(byte_size: int = 61_440) -> bytes:
    """The demo red-square image as a PNG padded to an exact upload size."""
    return pad_png_to_size(encode_png(red_square_demo_image()), byte_size)


@dataclass(frozen=True)
class LabelledImage:
    image: RasterImage
    lesions: tuple[BoundingBox, ...]


def lesion_image(rng: random.Random, width: int = 96, height: int = 96,
                 max_lesions: int = 3) -> LabelledImage:
    """Skin-toned image with 1..max_lesions planted elliptical lesions."""
    buf = bytearray()
    for _ in range(width * height):
        # luminance-only noise: same delta per channel keeps redness fixed
        delta = rng.randint(-14, 14)
        buf += bytes(max(0, min(255, c + delta)) for c in SKIN_BASE)

    boxes: list[BoundingBox] = []
    attempts = 0
    wanted = rng.randint(1, max_lesions)
    while len(boxes) < wanted and attempts < 50:
        attempts += 1
        rx = rng.randint(3, 8)
        ry = rng.randint(3, 8)
        cx = rng.randint(rx, width - rx - 1)
        cy = rng.randint(ry, height - ry - 1)
        candidate = BoundingBox(left=cx - rx, top=cy - ry,
                                width=2 * rx + 1, height=2 * ry + 1)
        if any(_too_close(candidate, b) for b in boxes):
            continue
        pixels = _fill_ellipse(buf, width, cx, cy, rx, ry, rng)
        xs = [x for x, _ in pixels]
        ys = [y for _, y in pixels]
        boxes.append(BoundingBox(left=min(xs), top=min(ys),
                                 width=max(xs) - min(xs) + 1,
                                 height=max(ys) - min(ys) + 1))
    image = RasterImage(width=width, height=height, pixels=bytes(buf))
    return LabelledImage(image=image, lesions=tuple(boxes))


def _too_close(a: BoundingBox, b: BoundingBox) -> bool:
    # keep a 3px moat so components never merge and boxes never overlap
    return not (a.left > b.right + 3 or b.left > a.right + 3
                or a.top > b.bottom + 3 or b.top > a.bottom + 3)


def _fill_ellipse(buf: bytearray, img_width: int, cx: int, cy: int,
                  rx: int, ry: int, rng: random.Random) -> list[tuple[int, int]]:
    pixels = []
    for y in range(cy - ry, cy + ry + 1):
        for x in range(cx - rx, cx + rx + 1):
            if ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 <= 1.0:
                delta = rng.randint(-10, 10)
                rgb = bytes(max(0, min(255, c + delta)) for c in LESION_BASE)
                buf[3 * (y * img_width + x):3 * (y * img_width + x) + 3] = rgb
                pixels.append((x, y))
    return pixels


def score_detections(predicted: list[Detection],
                     truth: list[BoundingBox],
                     iou_min: float) -> tuple[int, int, int]:
    """Greedy one-to-one matching; returns (matched, n_predicted, n_truth).

    precision = matched / n_predicted, recall = matched / n_truth.
    """
    unmatched = list(truth)
    matched = 0
    for det in sorted(predicted, key=lambda d: -d.confidence):
        best, best_iou = None, iou_min
        for gt in unmatched:
            overlap = iou(det.box, gt)
            if overlap >= best_iou:
                best, best_iou = gt, overlap
        if best is not None:
            unmatched.remove(best)
            matched += 1
    return matched, len(predicted), len(truth)
