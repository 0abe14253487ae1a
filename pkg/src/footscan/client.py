"""Programmatic client for the HTTP API.

Mirrors the service's wire format one call per endpoint, plus the two
composite flows callers actually want: submit-foot-exam and wait-for-result.
Deliberately performs no validation beyond encoding; every rule is enforced
server-side so going through this client and going straight to HTTP behave
identically.
"""

from __future__ import annotations

import base64
import time
from dataclasses import dataclass
from typing import Any

import httpx

from .domain import FootSide, InferenceResult, result_from_dict
from .errors import (
    ApiError,
    ConnectionFailed,
    IncompatibleVersion,
    JobFailed,
    Timeout,
)
from .jobs import QueueStats


@dataclass(frozen=True)
class ServerCheck:
    status: dict[str, Any]
    compatible: bool

    @property
    def queue(self) -> QueueStats:
        return QueueStats(**self.status["queue"])


def _side_value(side: FootSide | str) -> str:
    return side.value if isinstance(side, FootSide) else side


class ServiceClient:
    def __init__(self, base_url: str, token: str = "",
                 client_version: str = "1.0.0", timeout: float = 10.0,
                 http: httpx.Client | None = None):
        self.client_version = client_version
        self._headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._owns_http = http is None
        self._http = http if http is not None else httpx.Client(
            base_url=base_url, timeout=timeout)

    def close(self) -> None:
        if self._owns_http:
            self._http.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _request(self, method: str, path: str, **kwargs) -> dict[str, Any]:
        try:
            response = self._http.request(method, path, headers=self._headers,
                                          **kwargs)
        except httpx.TransportError as exc:
            raise ConnectionFailed(f"{method} {path}: {exc}") from exc
        if response.status_code >= 400:
            try:
                body = response.json()
                code = body.get("error_code", "UnknownError")
                message = body.get("message", response.text)
            except ValueError:
                code, message = "UnknownError", response.text
            raise ApiError(response.status_code, code, message)
        return response.json()

    # -- one call per endpoint ------------------------------------------------

    def status(self) -> dict[str, Any]:
        return self._request("GET", "/api/v1/status")

    def version_check(self) -> dict[str, Any]:
        return self._request("GET", "/api/v1/version",
                             params={"client": self.client_version})

    def create_exam(self, patient_id: str) -> str:
        return self._request("POST", "/api/v1/exams",
                             json={"patient_id": patient_id})["exam_id"]

    def get_exam(self, exam_id: str) -> dict[str, Any]:
        return self._request("GET", f"/api/v1/exams/{exam_id}")

    def record_foot_details(self, exam_id: str, side: FootSide | str,
                            checked: bool, visible_ulcer_count: int) -> dict:
        return self._request(
            "PUT", f"/api/v1/exams/{exam_id}/feet/{_side_value(side)}",
            json={"checked": checked,
                  "visible_ulcer_count": visible_ulcer_count})

    def upload_photo(self, exam_id: str, side: FootSide | str,
                     png_bytes: bytes) -> tuple[str, str]:
        body = {"png_base64": base64.b64encode(png_bytes).decode("ascii")}
        data = self._request(
            "POST", f"/api/v1/exams/{exam_id}/feet/{_side_value(side)}/photo",
            json=body)
        return data["photo_id"], data["job_id"]

    def get_job(self, job_id: str) -> dict[str, Any]:
        return self._request("GET", f"/api/v1/jobs/{job_id}")

    def confirm(self, exam_id: str, side: FootSide | str,
                agrees: bool) -> dict[str, Any]:
        return self._request(
            "POST",
            f"/api/v1/exams/{exam_id}/feet/{_side_value(side)}/confirmation",
            json={"agrees": agrees})

    def complete_exam(self, exam_id: str) -> dict[str, Any]:
        return self._request("POST", f"/api/v1/exams/{exam_id}/complete")

    # -- composite flows -------------------------------------------------------

    def check_server(self) -> ServerCheck:
        """Combine /status and /version; raises when this client is too old."""
        status = self.status()
        version = self.version_check()
        if not version["compatible"]:
            raise IncompatibleVersion(
                f"client {self.client_version} below minimum "
                f"{version['min_supported']}")
        return ServerCheck(status=status, compatible=True)

    def submit_foot_exam(self, exam_id: str, side: FootSide | str,
                         checked: bool, visible_ulcer_count: int,
                         png_bytes: bytes) -> str:
        """Record the foot details then upload the photo; returns the job id."""
        self.record_foot_details(exam_id, side, checked, visible_ulcer_count)
        _, job_id = self.upload_photo(exam_id, side, png_bytes)
        return job_id

    def await_result(self, job_id: str, timeout: float = 30.0,
                     poll_every: float = 0.5) -> InferenceResult:
        """Poll until the job completes, fails or the deadline passes."""
        deadline = time.monotonic() + timeout
        while True:
            job = self.get_job(job_id)
            if job["state"] == "complete":
                return result_from_dict({
                    "job_id": job_id,
                    "detections": job["detections"],
                    "detector_id": job["detector_id"],
                    "completed_at": job["completed_at"],
                })
            if job["state"] == "failed":
                raise JobFailed(job.get("failure_reason") or "unknown")
            if time.monotonic() >= deadline:
                raise Timeout(f"job {job_id} still {job['state']} "
                              f"after {timeout}s")
            time.sleep(min(poll_every, max(0.0, deadline - time.monotonic())))
