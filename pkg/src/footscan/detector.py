"""Lesion localisation: pluggable interface plus the reference detector.

The deployed system is meant to host a trained CNN behind this interface.
The reference implementation here is a deterministic redness-blob finder:
it exists so the queue, API and worker behaviour are fully verifiable
without proprietary model weights, and it is exact enough to be compared
against a brute-force oracle pixel for pixel.

Pipeline: per-pixel redness score -> candidate mask -> 4-connected
components -> area filter -> tight boxes with mean-redness confidence ->
greedy NMS -> report threshold.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .domain import BoundingBox, Detection, detection_sort_key
from .errors import ZeroSizeImage
from .images import RasterImage


@dataclass(frozen=True)
class DetectorConfig:
    redness_threshold: float = 0.15
    min_red_channel: int = 80
    min_area_fraction: float = 0.0005
    min_area_floor: int = 25
    report_threshold: float = 0.5
    nms_iou: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.redness_threshold < 1.0:
            raise ValueError("redness_threshold must be in (0, 1)")
        if not 0 <= self.min_red_channel <= 255:
            raise ValueError("min_red_channel must be in [0, 255]")
        if self.min_area_fraction < 0:
            raise ValueError("min_area_fraction must be >= 0")
        if self.min_area_floor < 1:
            raise ValueError("min_area_floor must be >= 1")
        if not 0.0 <= self.report_threshold <= 1.0:
            raise ValueError("report_threshold must be in [0, 1]")
        if not 0.0 <= self.nms_iou <= 1.0:
            raise ValueError("nms_iou must be in [0, 1]")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two pixel-grid boxes."""
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def nms(detections: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy non-maximum suppression.

    Repeatedly keeps the highest-confidence remaining detection and drops
    everything overlapping it with IoU strictly above the threshold. Ties
    resolve by (top, left) so the outcome is deterministic.
    """
    ordered = sorted(detections, key=detection_sort_key)
    kept: list[Detection] = []
    for det in ordered:
        if all(iou(det.box, k.box) <= iou_threshold for k in kept):
            kept.append(det)
    return kept


def detect(image: RasterImage, config: DetectorConfig | None = None) -> list[Detection]:
    """Run the reference redness-blob detector on a decoded image.

    Pure function: identical image and config give identical output on any
    host, which is what makes results worker-count independent. Component
    redness is accumulated in row-major pixel order so confidences are
    bit-reproducible.
    """
    config = config or DetectorConfig()
    if image.width < 1 or image.height < 1:
        raise ZeroSizeImage(f"image is {image.width}x{image.height}")
    w, h = image.width, image.height

    rgb = np.frombuffer(image.pixels, dtype=np.uint8).reshape(h, w, 3)
    red = rgb[:, :, 0]
    # redness = R/255 - max(G, B)/255, elementwise in float64
    redness = red / 255.0 - np.maximum(rgb[:, :, 1], rgb[:, :, 2]) / 255.0
    candidate = (redness >= config.redness_threshold) & (red >= config.min_red_channel)

    min_area = max(float(config.min_area_floor),
                   config.min_area_fraction * w * h)

    detections: list[Detection] = []
    visited = np.zeros((h, w), dtype=bool)
    for sy in range(h):
        for sx in range(w):
            if not candidate[sy, sx] or visited[sy, sx]:
                continue
            pixels = _flood_component(candidate, visited, sx, sy, w, h)
            if len(pixels) < min_area:
                continue
            xs = [x for x, _ in pixels]
            ys = [y for _, y in pixels]
            box = BoundingBox(left=min(xs), top=min(ys),
                              width=max(xs) - min(xs) + 1,
                              height=max(ys) - min(ys) + 1)
            # row-major accumulation keeps float results reproducible
            total = 0.0
            for x, y in sorted(pixels, key=lambda p: (p[1], p[0])):
                total += float(redness[y, x])
            confidence = min(1.0, 2.0 * (total / len(pixels)))
            detections.append(Detection(box=box, confidence=confidence))

    survivors = nms(detections, config.nms_iou)
    reported = [d for d in survivors if d.confidence >= config.report_threshold]
    return sorted(reported, key=detection_sort_key)


def _flood_component(candidate: np.ndarray, visited: np.ndarray,
                     sx: int, sy: int, w: int, h: int) -> list[tuple[int, int]]:
    """Collect one 4-connected component of candidate pixels via BFS."""
    pixels: list[tuple[int, int]] = []
    queue: deque[tuple[int, int]] = deque([(sx, sy)])
    visited[sy, sx] = True
    while queue:
        x, y = queue.popleft()
        pixels.append((x, y))
        for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
            if 0 <= nx < w and 0 <= ny < h \
                    and candidate[ny, nx] and not visited[ny, nx]:
                visited[ny, nx] = True
                queue.append((nx, ny))
    return pixels


class Detector(Protocol):
    """What the worker needs from any detector back end."""

    @property
    def detector_id(self) -> str: ...

    def detect(self, image: RasterImage) -> list[Detection]: ...


class RednessBlobDetector:
    """Reference detector bound to one configuration."""

    def __init__(self, config: DetectorConfig | None = None):
        self.config = config or DetectorConfig()

    @property
    def detector_id(self) -> str:
        return "redness-blob-v1"

    def detect(self, image: RasterImage) -> list[Detection]:
        return detect(image, self.config)
