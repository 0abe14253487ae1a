/**
 * QR input helpers: camera scanning where the browser supports it, with a
 * manual paste field as the universal fallback (also what desk-scale
 * testing without a camera uses).
 */

interface BarcodeDetectorLike {
  detect(source: CanvasImageSource): Promise<Array<{ rawValue: string }>>;
}

declare const BarcodeDetector: {
  new (options?: { formats: string[] }): BarcodeDetectorLike;
};

export function qrScanAvailable(): boolean {
  return (
    typeof BarcodeDetector !== "undefined" &&
    typeof navigator !== "undefined" &&
    !!navigator.mediaDevices?.getUserMedia
  );
}

/**
 * Opens the camera and resolves with the first QR payload seen.
 * Caller is responsible for showing `video` while scanning runs.
 */
export async function scanQr(
  video: HTMLVideoElement,
  signal?: AbortSignal,
): Promise<string> {
  const detector = new BarcodeDetector({ formats: ["qr_code"] });
  const stream = await navigator.mediaDevices.getUserMedia({
    video: { facingMode: "environment" },
  });
  video.srcObject = stream;
  await video.play();
  try {
    for (;;) {
      if (signal?.aborted) throw new Error("scan cancelled");
      const codes = await detector.detect(video);
      if (codes.length > 0) return codes[0].rawValue;
      await new Promise((resolve) => setTimeout(resolve, 150));
    }
  } finally {
    stream.getTracks().forEach((track) => track.stop());
    video.srcObject = null;
  }
}
