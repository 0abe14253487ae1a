"""HTTP gateway: JSON-over-REST endpoints for the exam workflow.

Thin by design: every rule lives in the domain layer, every write goes
through the store's versioned CAS (with one internal retry on conflict),
and every error surfaces as {"error_code", "message"} with the domain
error's name as the code.
"""

from __future__ import annotations

import base64
import binascii
import logging
import time
from dataclasses import dataclass
from typing import Callable

from fastapi import Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import ServiceConfig, parse_version
from .domain import (
    BlobRef,
    ExamRecord,
    FootSide,
    PhotographMeta,
    attach_photo,
    complete_exam,
    exam_to_dict,
    foot_to_dict,
    new_exam,
    new_id,
    record_confirmation,
    record_foot_details,
    result_to_dict,
)
from .errors import (
    BadImage,
    DomainError,
    FootscanError,
    MalformedVersion,
    NegativeCount,
    NotFound,
    QueueError,
    StorageError,
    StorageFailure,
    TooLarge,
    Unauthorized,
    UnknownPatient,
    UnknownPhoto,
    VersionConflict,
)
from .images import decode_png
from .jobs import JobQueue, JobState, QueueStats
from .store import Store

log = logging.getLogger("footscan.api")

_HTTP_STATUS: dict[type, int] = {
    NotFound: 404,
    UnknownPatient: 404,
    UnknownPhoto: 404,
    NegativeCount: 400,
    BadImage: 400,
    TooLarge: 400,
    MalformedVersion: 400,
    Unauthorized: 401,
    StorageFailure: 503,
}


def status_for_error(exc: FootscanError) -> int:
    for klass in type(exc).__mro__:
        if klass in _HTTP_STATUS:
            return _HTTP_STATUS[klass]
    if isinstance(exc, (DomainError, QueueError, StorageError)):
        return 409
    return 500


@dataclass(frozen=True)
class StatusReport:
    status: str  # "ok" | "degraded"
    store_ok: bool
    queue: QueueStats
    server_version: str

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "store_ok": self.store_ok,
            "queue": {
                "pending": self.queue.pending,
                "in_progress": self.queue.in_progress,
                "complete": self.queue.complete,
                "failed": self.queue.failed,
            },
            "server_version": self.server_version,
        }


class ExamBody(BaseModel):
    patient_id: str


class FootDetailsBody(BaseModel):
    checked: bool
    visible_ulcer_count: int


class PhotoBody(BaseModel):
    png_base64: str


class ConfirmationBody(BaseModel):
    agrees: bool


def _parse_side(side: str) -> FootSide:
    try:
        return FootSide(side)
    except ValueError:
        raise NotFound(f"unknown foot side {side!r}") from None


def create_app(config: ServiceConfig, store: Store | None = None,
               queue: JobQueue | None = None,
               clock: Callable[[], float] = time.time,
               id_factory: Callable[[], str] = new_id) -> FastAPI:
    store = store if store is not None else Store(config.store_config(), clock=clock)
    queue = queue if queue is not None else JobQueue(
        store, lease_seconds=config.lease_seconds, clock=clock)

    app = FastAPI(title="footscan", version=config.server_version)
    app.state.config = config
    app.state.store = store
    app.state.queue = queue
    app.state.clock = clock
    app.state.id_factory = id_factory

    def require_token(authorization: str | None = Header(default=None)) -> None:
        if not config.token:
            return
        if authorization != f"Bearer {config.token}":
            raise Unauthorized("missing or invalid bearer token")

    auth = [Depends(require_token)]

    @app.exception_handler(FootscanError)
    async def footscan_error_handler(request: Request, exc: FootscanError):
        return JSONResponse(status_code=status_for_error(exc),
                            content={"error_code": exc.code, "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"error_code": "ValidationError",
                                     "message": str(exc.errors())})

    @app.middleware("http")
    async def access_log(request: Request, call_next):
        start = time.perf_counter()
        response = await call_next(request)
        log.info("%s %s -> %d %.1fms", request.method, request.url.path,
                 response.status_code, 1000 * (time.perf_counter() - start))
        return response

    def mutate_exam(exam_id: str,
                    fn: Callable[[ExamRecord], ExamRecord]) -> ExamRecord:
        # one internal retry on a concurrent-writer conflict, then 409
        last: VersionConflict | None = None
        for _ in range(2):
            exam, version = store.load_exam(exam_id)
            updated = fn(exam)
            if updated == exam:
                return exam
            try:
                store.save_exam(updated, version)
                return updated
            except VersionConflict as exc:
                last = exc
        raise last  # type: ignore[misc]

    # -- endpoints -----------------------------------------------------------

    @app.get("/api/v1/status")
    def service_status():
        try:
            store.ping()
            stats = queue.stats()
            store_ok = True
        except Exception as exc:  # degraded is a report, not an error
            log.warning("status probe failed: %s", exc)
            stats = QueueStats()
            store_ok = False
        report = StatusReport(status="ok" if store_ok else "degraded",
                              store_ok=store_ok, queue=stats,
                              server_version=config.server_version)
        return report.to_dict()

    @app.get("/api/v1/version", dependencies=auth)
    def version_check(client: str | None = None):
        if client is None:
            raise MalformedVersion("client query parameter required")
        try:
            parse_version(client)
        except ValueError as exc:
            raise MalformedVersion(str(exc)) from exc
        policy = config.version_policy()
        return {
            "compatible": policy.compatible(client),
            "min_supported": policy.min_supported,
            "current": policy.current,
        }

    @app.post("/api/v1/exams", status_code=201, dependencies=auth)
    def create_exam(body: ExamBody):
        patient = store.get_patient(body.patient_id)
        if patient is None:
            raise UnknownPatient(f"patient {body.patient_id} not registered")
        exam = new_exam(patient, exam_id=id_factory(), now=clock())
        store.save_exam(exam, expected_version=0)
        return {"exam_id": exam.exam_id}

    @app.get("/api/v1/exams/{exam_id}", dependencies=auth)
    def get_exam(exam_id: str):
        exam, version = store.load_exam(exam_id)
        return {"version": version, **exam_to_dict(exam)}

    @app.put("/api/v1/exams/{exam_id}/feet/{side}", dependencies=auth)
    def put_foot_details(exam_id: str, side: str, body: FootDetailsBody):
        foot_side = _parse_side(side)
        exam = mutate_exam(exam_id, lambda e: record_foot_details(
            e, foot_side, body.checked, body.visible_ulcer_count))
        return foot_to_dict(exam.feet[foot_side])

    @app.post("/api/v1/exams/{exam_id}/feet/{side}/photo", status_code=202,
              dependencies=auth)
    def upload_photo(exam_id: str, side: str, body: PhotoBody):
        foot_side = _parse_side(side)
        try:
            data = base64.b64decode(body.png_base64, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise BadImage(f"payload is not valid base64: {exc}") from exc
        if len(data) == 0:
            raise BadImage("payload is empty")
        if len(data) > config.max_photo_bytes:
            raise TooLarge(
                f"{len(data)} bytes exceeds cap of {config.max_photo_bytes}")
        image = decode_png(data)

        photo_id = id_factory()
        meta = PhotographMeta(
            photo_id=photo_id,
            blob=BlobRef(strategy=config.blob_strategy, key=photo_id),
            width=image.width, height=image.height,
            byte_size=len(data), uploaded_at=clock(),
        )
        # dry-run the attach so a rejected upload stores no blob and no job
        exam, _ = store.load_exam(exam_id)
        attach_photo(exam, foot_side, meta)

        store.store_photo(data, photo_id)
        mutate_exam(exam_id, lambda e: attach_photo(e, foot_side, meta))
        job = queue.enqueue(exam_id, foot_side, photo_id)
        return {"photo_id": photo_id, "job_id": job.job_id}

    @app.get("/api/v1/jobs/{job_id}", dependencies=auth)
    def job_status(job_id: str):
        job = queue.get(job_id)
        if job.state is JobState.COMPLETE:
            payload = result_to_dict(job.result)
            return {"state": job.state.value,
                    "detections": payload["detections"],
                    "detector_id": payload["detector_id"],
                    "completed_at": payload["completed_at"]}
        if job.state is JobState.FAILED:
            return {"state": job.state.value,
                    "failure_reason": job.failure_reason}
        return {"state": job.state.value}

    @app.post("/api/v1/exams/{exam_id}/feet/{side}/confirmation",
              dependencies=auth)
    def post_confirmation(exam_id: str, side: str, body: ConfirmationBody):
        foot_side = _parse_side(side)
        exam = mutate_exam(exam_id, lambda e: record_confirmation(
            e, foot_side, body.agrees, now=clock()))
        return foot_to_dict(exam.feet[foot_side])

    @app.post("/api/v1/exams/{exam_id}/complete", dependencies=auth)
    def post_complete(exam_id: str):
        exam = mutate_exam(exam_id, lambda e: complete_exam(e, now=clock()))
        return exam_to_dict(exam)

    return app
