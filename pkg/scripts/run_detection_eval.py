#!/usr/bin/env python3
"""Evaluate the reference detector on a synthetic lesion corpus.

Generates skin-toned images with planted lesions, runs detection, and
prints precision/recall at a sweep of IoU thresholds. Reproducible via
the seed; the acceptance bar is precision=recall=1.0 at IoU >= 0.9.

Usage: python scripts/run_detection_eval.py [--images N] [--seed S]
"""

from __future__ import annotations

import argparse
import random
import time

from footscan.detector import DetectorConfig, detect
from footscan.synthetic import lesion_image, score_detections


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--images", type=int, default=100)
    parser.add_argument("--seed", type=int, default=100_100)
    parser.add_argument("--width", type=int, default=96)
    parser.add_argument("--height", type=int, default=96)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    config = DetectorConfig()
    corpus = [lesion_image(rng, width=args.width, height=args.height)
              for _ in range(args.images)]

    started = time.perf_counter()
    predictions = [detect(item.image, config) for item in corpus]
    elapsed = time.perf_counter() - started

    n_lesions = sum(len(item.lesions) for item in corpus)
    print(f"{args.images} images, {n_lesions} planted lesions, "
          f"{elapsed:.2f}s total ({1000 * elapsed / args.images:.1f} ms/image)")
    print(f"{'IoU':>6} {'matched':>8} {'precision':>10} {'recall':>8}")
    for iou_min in (0.5, 0.7, 0.8, 0.9, 0.95, 1.0):
        matched = n_pred = n_truth = 0
        for item, preds in zip(corpus, predictions):
            m, p, t = score_detections(preds, list(item.lesions), iou_min)
            matched, n_pred, n_truth = matched + m, n_pred + p, n_truth + t
        precision = matched / n_pred if n_pred else 1.0
        recall = matched / n_truth if n_truth else 1.0
        print(f"{iou_min:>6.2f} {matched:>8} {precision:>10.4f} {recall:>8.4f}")


if __name__ == "__main__":
    main()
