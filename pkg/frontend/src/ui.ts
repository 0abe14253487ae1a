/**
 * DOM rendering for the exam flow: one full re-render per state change.
 *
 * Every control that would trigger a server-rejected action is disabled
 * before the request can be made — uploaded photos disable their capture
 * controls, photographed feet render their tickbox and count read-only,
 * and the terminal screen carries no mutating controls at all.
 */

import type { Side } from "./api.js";
import { bytesToBase64 } from "./api.js";
import { ExamFlow, FlowState, SIDES, infoText } from "./flow.js";
import { renderOverlay } from "./overlay.js";
import { pngDimensions } from "./png.js";
import { qrScanAvailable, scanQr } from "./qr.js";

export function mountApp(container: HTMLElement, flow: ExamFlow): void {
  flow.subscribe((state) => render(container, flow, state));
  render(container, flow, flow.getState());
}

async function readFileBytes(file: File): Promise<Uint8Array> {
  if (typeof file.arrayBuffer === "function") {
    return new Uint8Array(await file.arrayBuffer());
  }
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(new Uint8Array(reader.result as ArrayBuffer));
    reader.onerror = () => reject(reader.error);
    reader.readAsArrayBuffer(file);
  });
}

function cameraAvailable(): boolean {
  return typeof navigator !== "undefined" &&
    !!navigator.mediaDevices?.getUserMedia;
}

/** One frame from the device camera, encoded as PNG bytes. */
async function captureFromCamera(doc: Document): Promise<Uint8Array> {
  const stream = await navigator.mediaDevices.getUserMedia({
    video: { facingMode: "environment" },
  });
  try {
    const video = doc.createElement("video");
    video.srcObject = stream;
    await video.play();
    const canvas = doc.createElement("canvas");
    canvas.width = video.videoWidth;
    canvas.height = video.videoHeight;
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas is unavailable in this browser");
    ctx.drawImage(video, 0, 0);
    const blob = await new Promise<Blob | null>((resolve) =>
      canvas.toBlob(resolve, "image/png"));
    if (!blob) throw new Error("camera capture produced no image");
    return new Uint8Array(await blob.arrayBuffer());
  } finally {
    stream.getTracks().forEach((track) => track.stop());
  }
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) node.textContent = text;
  return node;
}

function render(container: HTMLElement, flow: ExamFlow, state: FlowState): void {
  const doc = container.ownerDocument;
  container.textContent = "";

  const infoBar = el(doc, "div", { class: "info-bar", "data-testid": "info-bar" },
    infoText(state));
  container.appendChild(infoBar);

  if (state.banner) {
    container.appendChild(
      el(doc, "div", { class: "banner", "data-testid": "banner", role: "alert" },
        state.banner));
  }

  const screen = el(doc, "section", {
    class: `screen screen-${state.screen}`,
    "data-testid": `screen-${state.screen}`,
  });
  container.appendChild(screen);

  switch (state.screen) {
    case "connect":
      renderConnect(doc, screen, flow, state);
      break;
    case "patient":
      renderPatient(doc, screen, flow, state);
      break;
    case "details":
      renderDetails(doc, screen, flow, state);
      break;
    case "counts":
      renderCounts(doc, screen, flow, state);
      break;
    case "photo":
      renderPhoto(doc, screen, flow, state);
      break;
    case "result":
      renderResult(doc, screen, flow, state);
      break;
    case "confirm":
      renderConfirm(doc, screen, flow, state);
      break;
    case "review":
      renderReview(doc, screen, flow, state);
      break;
    case "done":
      renderDone(doc, screen, state);
      break;
  }
}

function button(
  doc: Document,
  label: string,
  testid: string,
  disabled: boolean,
  onClick: () => void,
): HTMLButtonElement {
  const node = el(doc, "button", { "data-testid": testid, type: "button" }, label);
  node.disabled = disabled;
  node.addEventListener("click", onClick);
  return node;
}

function renderConnect(doc: Document, screen: HTMLElement, flow: ExamFlow,
                       state: FlowState): void {
  screen.appendChild(el(doc, "h1", {}, "Foot examination"));
  screen.appendChild(
    button(doc, "Connect to server", "connect-button", state.busy,
           () => void flow.connect()));
}

function renderPatient(doc: Document, screen: HTMLElement, flow: ExamFlow,
                       state: FlowState): void {
  screen.appendChild(el(doc, "h1", {}, "Patient"));
  const payload = el(doc, "input", {
    type: "text",
    placeholder: "QR payload (patient id)",
    "data-testid": "qr-payload",
  });
  screen.appendChild(payload);
  screen.appendChild(
    button(doc, "Start examination", "start-exam", state.busy,
           () => void flow.startExam(payload.value)));

  if (qrScanAvailable()) {
    const video = el(doc, "video", { class: "qr-video" });
    screen.appendChild(video);
    screen.appendChild(
      button(doc, "Scan QR with camera", "scan-qr", state.busy, () => {
        void scanQr(video).then((value) => flow.startExam(value));
      }));
  } else {
    screen.appendChild(
      el(doc, "p", { class: "hint" },
         "Camera scanning is unavailable here; paste the QR payload instead."));
  }
}

function lockNote(doc: Document, side: Side): HTMLElement {
  return el(doc, "p", { class: "hint", "data-testid": `lock-note-${side}` },
    `The ${side} foot photograph is uploaded, so its details are locked.`);
}

function renderDetails(doc: Document, screen: HTMLElement, flow: ExamFlow,
                       state: FlowState): void {
  screen.appendChild(el(doc, "h1", {}, "Foot details"));
  for (const side of SIDES) {
    const foot = state.feet[side];
    const row = el(doc, "div", { class: "foot-row" });
    const box = el(doc, "input", {
      type: "checkbox",
      id: `checked-${side}`,
      "data-testid": `checked-${side}`,
    });
    box.checked = foot.checked;
    // once this side's photo is up the tickbox is read-only
    box.disabled = foot.photoId !== null || state.busy;
    box.addEventListener("change", () => flow.setChecked(side, box.checked));
    row.appendChild(box);
    row.appendChild(
      el(doc, "label", { for: `checked-${side}` }, `${side} foot examined`));
    screen.appendChild(row);
    if (foot.photoId) screen.appendChild(lockNote(doc, side));
  }
  screen.appendChild(
    button(doc, "Continue", "details-continue", state.busy,
           () => void flow.saveDetails()));
}

function renderCounts(doc: Document, screen: HTMLElement, flow: ExamFlow,
                      state: FlowState): void {
  screen.appendChild(el(doc, "h1", {}, "Visible ulcers"));
  for (const side of SIDES) {
    const foot = state.feet[side];
    if (!foot.checked) continue;
    const row = el(doc, "div", { class: "foot-row" });
    const input = el(doc, "input", {
      type: "number",
      min: "0",
      id: `count-${side}`,
      "data-testid": `count-${side}`,
    });
    input.value = String(foot.count);
    input.disabled = foot.photoId !== null || state.busy;
    input.addEventListener("change", () =>
      flow.setCount(side, Number(input.value)));
    row.appendChild(
      el(doc, "label", { for: `count-${side}` },
         `${side} foot visible ulcers`));
    row.appendChild(input);
    screen.appendChild(row);
    if (foot.photoId) screen.appendChild(lockNote(doc, side));
  }
  screen.appendChild(
    button(doc, "Continue", "counts-continue", state.busy,
           () => void flow.saveCounts()));
}

function renderPhoto(doc: Document, screen: HTMLElement, flow: ExamFlow,
                     state: FlowState): void {
  const side = state.currentSide;
  const foot = state.feet[side];
  const uploaded = foot.photoId !== null;
  screen.appendChild(el(doc, "h1", {}, `${side} foot photograph`));

  const submitBytes = (bytes: Uint8Array) => {
    const dims = pngDimensions(bytes);
    void flow.uploadPhoto(side, bytesToBase64(bytes),
                          dims?.width ?? 0, dims?.height ?? 0);
  };

  const picker = el(doc, "input", {
    type: "file",
    accept: "image/png",
    "data-testid": "photo-input",
  });
  picker.disabled = uploaded || state.busy;
  picker.addEventListener("change", () => {
    const file = picker.files?.[0];
    if (!file) return;
    void readFileBytes(file).then(submitBytes);
  });
  screen.appendChild(picker);

  const capture = button(doc, "Capture photograph", "capture-button",
    uploaded || state.busy || !cameraAvailable(),
    () => {
      captureFromCamera(doc).then(submitBytes, (err) =>
        flow.showBanner(`Camera capture failed: ${err.message ?? err}`));
    });
  screen.appendChild(capture);

  if (uploaded) {
    screen.appendChild(
      el(doc, "p", { class: "hint", "data-testid": "no-retake-note" },
         "A photograph has already been uploaded for this foot; it cannot be retaken."));
    screen.appendChild(
      button(doc, "Continue to result", "photo-continue", state.busy, () =>
        flow.goTo("result")));
  } else {
    screen.appendChild(
      button(doc, "No photograph for this foot", "skip-photo", state.busy,
             () => flow.skipPhoto(side)));
  }
  screen.appendChild(
    button(doc, "Back to details", "back-to-details", state.busy, () =>
      flow.goTo("details")));
}

function renderResult(doc: Document, screen: HTMLElement, flow: ExamFlow,
                      state: FlowState): void {
  const side = state.currentSide;
  const foot = state.feet[side];
  screen.appendChild(el(doc, "h1", {}, `${side} foot result`));

  if (state.polling) {
    screen.appendChild(
      el(doc, "div", { class: "progress", "data-testid": "progress" },
         "Analysing…"));
    return;
  }
  if (foot.failureReason) {
    screen.appendChild(
      el(doc, "p", { "data-testid": "failure-reason" },
         `Analysis failed: ${foot.failureReason}`));
    return;
  }

  const frame = el(doc, "div", { class: "photo-frame" });
  const img = el(doc, "img", { "data-testid": "result-photo" });
  if (foot.photoDataUrl) img.src = foot.photoDataUrl;
  frame.appendChild(img);
  const layer = el(doc, "div", {
    class: "overlay-layer",
    "data-testid": "overlay-layer",
  });
  frame.appendChild(layer);
  screen.appendChild(frame);

  const detections = foot.detections ?? [];
  const displayWidth = img.clientWidth || foot.photoWidth;
  renderOverlay(layer, detections, foot.photoWidth || 1, displayWidth || 1);

  screen.appendChild(
    el(doc, "p", { "data-testid": "detection-count" },
       detections.length === 0
         ? "No regions of concern were detected."
         : `${detections.length} region(s) detected.`));

  screen.appendChild(
    button(doc, "Continue to confirmation", "to-confirmation", state.busy,
           () => flow.toConfirmation()));
}

function renderConfirm(doc: Document, screen: HTMLElement, flow: ExamFlow,
                       state: FlowState): void {
  const side = state.currentSide;
  screen.appendChild(el(doc, "h1", {}, `${side} foot confirmation`));
  screen.appendChild(
    el(doc, "p", {}, "Do you agree with the detection result?"));
  screen.appendChild(
    button(doc, "Agree", "confirm-agree", state.busy,
           () => void flow.confirmResult(side, true)));
  screen.appendChild(
    button(doc, "Disagree", "confirm-disagree", state.busy,
           () => void flow.confirmResult(side, false)));
}

function renderReview(doc: Document, screen: HTMLElement, flow: ExamFlow,
                      state: FlowState): void {
  screen.appendChild(el(doc, "h1", {}, "Review"));
  for (const side of SIDES) {
    const foot = state.feet[side];
    const bits = [
      foot.checked ? "examined" : "not examined",
      `${foot.count} visible ulcer(s)`,
      foot.photoId ? "photo uploaded" : "no photo",
    ];
    if (foot.detections !== null) {
      bits.push(`${foot.detections.length} detection(s)`);
    }
    if (foot.agrees !== null) {
      bits.push(foot.agrees ? "clinician agrees" : "clinician disagrees");
    }
    screen.appendChild(
      el(doc, "p", { "data-testid": `summary-${side}` },
         `${side}: ${bits.join(", ")}`));
  }
  screen.appendChild(
    button(doc, "Complete examination", "complete-exam", state.busy,
           () => void flow.completeExam()));
  screen.appendChild(
    button(doc, "Back to details", "back-to-details", state.busy, () =>
      flow.goTo("details")));
}

function renderDone(doc: Document, screen: HTMLElement, state: FlowState): void {
  screen.appendChild(el(doc, "h1", {}, "Examination complete"));
  screen.appendChild(
    el(doc, "p", { "data-testid": "done-note" },
       `Examination ${state.examId ?? ""} for patient ` +
       `${state.patientId ?? ""} has been completed and stored.`));
  // terminal screen: deliberately no buttons, inputs or links
}
