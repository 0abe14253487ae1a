/**
 * Exam flow state machine.
 *
 * Drives the six-screen clinician workflow against the server: connect
 * gate -> patient scan -> foot details -> ulcer counts -> per-foot photo /
 * result / confirmation -> review -> examination complete.
 *
 * One mutating request is in flight at a time (`busy` gates every action),
 * controls that would be rejected server-side are disabled in the UI
 * before a request can happen, and any 409 that slips through anyway is
 * shown as a banner followed by a re-sync from GET — the server stays the
 * single source of truth.
 */

import { ApiError, ConnectionError } from "./api.js";
import type { Api } from "./api.js";
import type { Detection, ExamView, Side } from "./api.js";
import { messageFor } from "./messages.js";

export type Screen =
  | "connect"
  | "patient"
  | "details"
  | "counts"
  | "photo"
  | "result"
  | "confirm"
  | "review"
  | "done";

export interface FootFlowState {
  checked: boolean;
  count: number;
  photoId: string | null;
  photoWidth: number;
  photoHeight: number;
  photoDataUrl: string | null;
  jobId: string | null;
  detections: Detection[] | null;
  failureReason: string | null;
  agrees: boolean | null;
  skipped: boolean;
}

export interface FlowState {
  screen: Screen;
  busy: boolean;
  polling: boolean;
  banner: string | null;
  serverVersion: string | null;
  patientId: string | null;
  examId: string | null;
  examCompleted: boolean;
  currentSide: Side;
  feet: Record<Side, FootFlowState>;
}

export const SIDES: Side[] = ["left", "right"];

function emptyFoot(): FootFlowState {
  return {
    checked: true,
    count: 0,
    photoId: null,
    photoWidth: 0,
    photoHeight: 0,
    photoDataUrl: null,
    jobId: null,
    detections: null,
    failureReason: null,
    agrees: null,
    skipped: false,
  };
}

export function initialState(): FlowState {
  return {
    screen: "connect",
    busy: false,
    polling: false,
    banner: null,
    serverVersion: null,
    patientId: null,
    examId: null,
    examCompleted: false,
    currentSide: "left",
    feet: { left: emptyFoot(), right: emptyFoot() },
  };
}

/** The information bar: always states the next required action. */
export function infoText(state: FlowState): string {
  if (state.examCompleted || state.screen === "done") {
    return "Examination complete — no further changes are possible.";
  }
  switch (state.screen) {
    case "connect":
      return "Connect to the examination server to begin.";
    case "patient":
      return "Scan the patient's QR code, or paste its payload.";
    case "details":
      return "Tick each foot you are examining, then continue.";
    case "counts":
      return "Enter the number of visible ulcers for each examined foot.";
    case "photo": {
      const foot = state.feet[state.currentSide];
      if (foot.photoId) {
        return `The ${state.currentSide} foot photograph is uploaded — continue to its result.`;
      }
      return `Photograph the ${state.currentSide} foot, or skip if no photograph is needed.`;
    }
    case "result":
      return state.polling
        ? `Analysing the ${state.currentSide} foot photograph…`
        : `Review the detections for the ${state.currentSide} foot.`;
    case "confirm":
      return `Record whether you agree with the ${state.currentSide} foot result.`;
    case "review":
      return "Review both feet, then complete the examination.";
  }
  return "";
}

export class ExamFlow {
  private state: FlowState = initialState();
  private listeners = new Set<(state: FlowState) => void>();

  constructor(
    private readonly api: Api,
    private readonly options: {
      clientVersion?: string;
      pollIntervalMs?: number;
    } = {},
  ) {}

  getState(): FlowState {
    return this.state;
  }

  subscribe(listener: (state: FlowState) => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private patch(partial: Partial<FlowState>): void {
    this.state = { ...this.state, ...partial };
    this.emit();
  }

  private patchFoot(side: Side, partial: Partial<FootFlowState>): void {
    this.patch({
      feet: { ...this.state.feet, [side]: { ...this.state.feet[side], ...partial } },
    });
  }

  /**
   * Runs one mutating action; rejects overlap, maps errors to banners,
   * and re-syncs from the server after a conflict.
   */
  private async run(action: () => Promise<void>): Promise<void> {
    if (this.state.busy) return;
    this.patch({ busy: true, banner: null });
    try {
      await action();
    } catch (err) {
      if (err instanceof ApiError) {
        this.patch({ banner: messageFor(err.errorCode, err.message) });
        if (err.status === 409 && this.state.examId) {
          await this.resync();
        }
      } else if (err instanceof ConnectionError) {
        this.patch({
          banner:
            "Cannot reach the server — check the connection and try again.",
        });
      } else {
        throw err;
      }
    } finally {
      this.patch({ busy: false });
    }
  }

  // -- gate -------------------------------------------------------------

  async connect(): Promise<void> {
    await this.run(async () => {
      const status = await this.api.status();
      const version = await this.api.versionCheck(
        this.options.clientVersion ?? "1.0.0",
      );
      if (status.status !== "ok") {
        this.patch({
          banner: "The server is degraded — try again shortly.",
          serverVersion: status.server_version,
        });
        return;
      }
      if (!version.compatible) {
        this.patch({
          banner: `This app is too old for the server (needs ${version.min_supported} or newer). Update before continuing.`,
          serverVersion: status.server_version,
        });
        return;
      }
      this.patch({ serverVersion: status.server_version, screen: "patient" });
    });
  }

  // -- patient ------------------------------------------------------------

  async startExam(qrPayload: string): Promise<void> {
    await this.run(async () => {
      const patientId = qrPayload.trim();
      if (!patientId) {
        this.patch({ banner: "Scan or paste a patient QR payload first." });
        return;
      }
      const examId = await this.api.createExam(patientId);
      this.patch({ patientId, examId, screen: "details" });
    });
  }

  // -- details & counts ------------------------------------------------------

  setChecked(side: Side, checked: boolean): void {
    if (this.state.feet[side].photoId) return; // locked server-side too
    this.patchFoot(side, { checked });
  }

  setCount(side: Side, count: number): void {
    if (this.state.feet[side].photoId) return;
    this.patchFoot(side, { count: Math.max(0, Math.floor(count)) });
  }

  async saveDetails(): Promise<void> {
    await this.run(async () => {
      for (const side of SIDES) {
        const foot = this.state.feet[side];
        if (foot.photoId) continue; // locked after upload; nothing to save
        await this.api.putFootDetails(
          this.state.examId!,
          side,
          foot.checked,
          foot.count,
        );
      }
      this.patch({ screen: "counts" });
    });
  }

  async saveCounts(): Promise<void> {
    await this.run(async () => {
      for (const side of SIDES) {
        const foot = this.state.feet[side];
        if (foot.photoId || !foot.checked) continue;
        await this.api.putFootDetails(
          this.state.examId!,
          side,
          foot.checked,
          foot.count,
        );
      }
      this.advanceToNextFoot();
    });
  }

  /** Moves to the next examined foot still needing photo work, else review. */
  private advanceToNextFoot(): void {
    for (const side of SIDES) {
      const foot = this.state.feet[side];
      if (!foot.checked || foot.skipped) continue;
      if (!foot.photoId) {
        this.patch({ currentSide: side, screen: "photo" });
        return;
      }
      if (foot.detections === null && foot.failureReason === null) {
        this.patch({ currentSide: side, screen: "result" });
        return;
      }
      if (foot.agrees === null && foot.detections !== null) {
        this.patch({ currentSide: side, screen: "confirm" });
        return;
      }
    }
    this.patch({ screen: "review" });
  }

  // -- photo / result / confirmation ------------------------------------------

  async uploadPhoto(side: Side, pngBase64: string, width: number,
                    height: number): Promise<void> {
    await this.run(async () => {
      const { photo_id, job_id } = await this.api.uploadPhoto(
        this.state.examId!,
        side,
        pngBase64,
      );
      this.patchFoot(side, {
        photoId: photo_id,
        jobId: job_id,
        photoWidth: width,
        photoHeight: height,
        photoDataUrl: `data:image/png;base64,${pngBase64}`,
      });
      this.patch({ currentSide: side, screen: "result", polling: true });
    });
    if (this.state.polling) {
      await this.pollResult(side);
    }
  }

  skipPhoto(side: Side): void {
    if (this.state.feet[side].photoId) return;
    this.patchFoot(side, { skipped: true });
    this.advanceToNextFoot();
  }

  private async pollResult(side: Side): Promise<void> {
    const interval = this.options.pollIntervalMs ?? 1000;
    const jobId = this.state.feet[side].jobId!;
    for (;;) {
      let job;
      try {
        job = await this.api.getJob(jobId);
      } catch (err) {
        this.patch({
          polling: false,
          banner: "Lost contact with the server while waiting for the result — reconnect and retry.",
        });
        return;
      }
      if (job.state === "complete") {
        this.patchFoot(side, { detections: job.detections });
        this.patch({ polling: false });
        return;
      }
      if (job.state === "failed") {
        this.patchFoot(side, { failureReason: job.failure_reason });
        this.patch({
          polling: false,
          banner: `Analysis failed (${job.failure_reason}). The examination cannot complete with an unanalysed photograph.`,
        });
        return;
      }
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }

  toConfirmation(): void {
    if (this.state.feet[this.state.currentSide].detections === null) return;
    this.patch({ screen: "confirm" });
  }

  async confirmResult(side: Side, agrees: boolean): Promise<void> {
    await this.run(async () => {
      await this.api.confirm(this.state.examId!, side, agrees);
      this.patchFoot(side, { agrees });
      this.advanceToNextFoot();
    });
  }

  // -- completion ---------------------------------------------------------------

  async completeExam(): Promise<void> {
    await this.run(async () => {
      await this.api.completeExam(this.state.examId!);
      this.patch({ examCompleted: true, screen: "done" });
    });
  }

  // -- navigation & re-sync --------------------------------------------------------

  goTo(screen: Screen): void {
    if (this.state.examCompleted) return;
    this.patch({ screen });
  }

  /** Surfaces a client-side problem (camera failure etc.) in the banner. */
  showBanner(message: string): void {
    this.patch({ banner: message });
  }

  /** Reloads exam state from the server (single source of truth). */
  async resync(): Promise<void> {
    const view = await this.api.getExam(this.state.examId!);
    this.applyExamView(view);
  }

  private applyExamView(view: ExamView): void {
    const feet = { ...this.state.feet };
    for (const side of SIDES) {
      const foot = view.feet[side];
      if (foot === null) continue;
      const local = feet[side];
      feet[side] = {
        ...local,
        checked: foot.checked,
        count: foot.visible_ulcer_count,
        photoId: foot.photo?.photo_id ?? null,
        photoWidth: foot.photo?.width ?? local.photoWidth,
        photoHeight: foot.photo?.height ?? local.photoHeight,
        detections: foot.result?.detections ?? local.detections,
        agrees: foot.confirmation?.agrees ?? local.agrees,
      };
    }
    this.patch({
      feet,
      examCompleted: view.state === "completed",
      screen: view.state === "completed" ? "done" : this.state.screen,
    });
  }
}
