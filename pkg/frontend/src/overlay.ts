/**
 * Detection-box overlay geometry and rendering.
 *
 * Boxes arrive in image pixel coordinates; the photo may be displayed at
 * any scale, so each rect is mapped by the single ratio between displayed
 * and natural width. At scale 1 the overlay is pixel-identical to the
 * detector output.
 */

import type { Detection } from "./api.js";

export interface OverlayRect {
  left: number;
  top: number;
  width: number;
  height: number;
  label: string;
}

export function overlayRects(
  detections: Detection[],
  imageWidth: number,
  displayWidth: number,
): OverlayRect[] {
  const scale = imageWidth > 0 ? displayWidth / imageWidth : 1;
  return detections.map((d) => ({
    left: d.left * scale,
    top: d.top * scale,
    width: d.width * scale,
    height: d.height * scale,
    label: `${(d.confidence * 100).toFixed(0)}%`,
  }));
}

/** Builds absolutely-positioned box divs inside `layer` (cleared first). */
export function renderOverlay(
  layer: HTMLElement,
  detections: Detection[],
  imageWidth: number,
  displayWidth: number,
): void {
  layer.textContent = "";
  for (const rect of overlayRects(detections, imageWidth, displayWidth)) {
    const box = layer.ownerDocument.createElement("div");
    box.className = "detection-box";
    box.dataset.testid = "detection-box";
    box.style.position = "absolute";
    box.style.left = `${rect.left}px`;
    box.style.top = `${rect.top}px`;
    box.style.width = `${rect.width}px`;
    box.style.height = `${rect.height}px`;

    const label = layer.ownerDocument.createElement("span");
    label.className = "detection-label";
    label.textContent = rect.label;
    box.appendChild(label);
    layer.appendChild(box);
  }
}
