/**
 * Typed client for the footscan HTTP API.
 *
 * Mirrors the wire format exactly and performs no validation of its own:
 * every workflow rule is enforced server-side, so errors here are either
 * transport failures or the server's {error_code, message} rejections.
 */

export type Side = "left" | "right";

export interface Detection {
  left: number;
  top: number;
  width: number;
  height: number;
  confidence: number;
}

export interface QueueCounts {
  pending: number;
  in_progress: number;
  complete: number;
  failed: number;
}

export interface StatusReport {
  status: "ok" | "degraded";
  store_ok: boolean;
  queue: QueueCounts;
  server_version: string;
}

export interface VersionReport {
  compatible: boolean;
  min_supported: string;
  current: string;
}

export interface FootView {
  side: Side;
  checked: boolean;
  visible_ulcer_count: number;
  photo: {
    photo_id: string;
    width: number;
    height: number;
    byte_size: number;
  } | null;
  result: { job_id: string; detections: Detection[] } | null;
  confirmation: { agrees: boolean; recorded_at?: number } | null;
}

export interface ExamView {
  exam_id: string;
  state: "open" | "completed";
  feet: { left: FootView | null; right: FootView | null };
}

export type JobView =
  | { state: "pending" | "in_progress" }
  | { state: "complete"; detections: Detection[]; detector_id: string }
  | { state: "failed"; failure_reason: string };

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorCode: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ConnectionError extends Error {}

export function bytesToBase64(bytes: Uint8Array): string {
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}

/** What the exam flow needs from the server; ApiClient is the real one. */
export interface Api {
  status(): Promise<StatusReport>;
  versionCheck(clientVersion: string): Promise<VersionReport>;
  createExam(patientId: string): Promise<string>;
  getExam(examId: string): Promise<ExamView>;
  putFootDetails(
    examId: string,
    side: Side,
    checked: boolean,
    visibleUlcerCount: number,
  ): Promise<FootView>;
  uploadPhoto(
    examId: string,
    side: Side,
    pngBase64: string,
  ): Promise<{ photo_id: string; job_id: string }>;
  getJob(jobId: string): Promise<JobView>;
  confirm(examId: string, side: Side, agrees: boolean): Promise<FootView>;
  completeExam(examId: string): Promise<ExamView>;
}

export class ApiClient implements Api {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ConnectionError(`cannot reach server: ${err}`);
    }
    if (!response.ok) {
      let code = "UnknownError";
      let message = response.statusText;
      try {
        const payload = await response.json();
        code = payload.error_code ?? code;
        message = payload.message ?? message;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  status(): Promise<StatusReport> {
    return this.request("GET", "/api/v1/status");
  }

  versionCheck(clientVersion: string): Promise<VersionReport> {
    return this.request(
      "GET",
      `/api/v1/version?client=${encodeURIComponent(clientVersion)}`,
    );
  }

  async createExam(patientId: string): Promise<string> {
    const body = await this.request<{ exam_id: string }>(
      "POST",
      "/api/v1/exams",
      { patient_id: patientId },
    );
    return body.exam_id;
  }

  getExam(examId: string): Promise<ExamView> {
    return this.request("GET", `/api/v1/exams/${examId}`);
  }

  putFootDetails(
    examId: string,
    side: Side,
    checked: boolean,
    visibleUlcerCount: number,
  ): Promise<FootView> {
    return this.request("PUT", `/api/v1/exams/${examId}/feet/${side}`, {
      checked,
      visible_ulcer_count: visibleUlcerCount,
    });
  }

  uploadPhoto(
    examId: string,
    side: Side,
    pngBase64: string,
  ): Promise<{ photo_id: string; job_id: string }> {
    return this.request("POST", `/api/v1/exams/${examId}/feet/${side}/photo`, {
      png_base64: pngBase64,
    });
  }

  getJob(jobId: string): Promise<JobView> {
    return this.request("GET", `/api/v1/jobs/${jobId}`);
  }

  confirm(examId: string, side: Side, agrees: boolean): Promise<FootView> {
    return this.request(
      "POST",
      `/api/v1/exams/${examId}/feet/${side}/confirmation`,
      { agrees },
    );
  }

  completeExam(examId: string): Promise<ExamView> {
    return this.request("POST", `/api/v1/exams/${examId}/complete`);
  }
}
