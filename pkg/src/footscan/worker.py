"""Polling inference worker.

Claims the oldest incomplete job, decodes its photograph, runs the
detector, writes the result onto the exam record and marks the job
complete. Any number of worker instances may run in parallel; safety
comes entirely from the queue's atomic claim and the store's CAS writes.

The result is written to the exam *before* the job is marked complete: a
crash between the two yields a retried job that rewrites an identical
result (the detector is pure), never a lost one.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

from .detector import Detector, RednessBlobDetector
from .domain import InferenceResult, record_result
from .errors import (
    BadImage,
    DomainError,
    InvalidState,
    NotFound,
    StorageFailure,
    VersionConflict,
)
from .images import decode_png
from .jobs import Job, JobQueue
from .store import Store

log = logging.getLogger("footscan.worker")

_CAS_RETRIES = 25


@dataclass(frozen=True)
class RunOutcome:
    processed: bool
    job_id: Optional[str] = None
    status: Optional[str] = None  # "complete" | "failed" | "requeued"


class InferenceWorker:
    def __init__(self, worker_id: str, store: Store, queue: JobQueue,
                 detector: Detector | None = None, max_attempts: int = 3,
                 clock: Callable[[], float] = time.time):
        self.worker_id = worker_id
        self.store = store
        self.queue = queue
        self.detector = detector or RednessBlobDetector()
        self.max_attempts = max_attempts
        self._clock = clock

    def run_once(self) -> RunOutcome:
        """Process at most one job; returns processed=False on empty queue.

        StorageFailure while the store is unreachable propagates with the
        job left in_progress; the lease makes it claimable again later.
        """
        job = self.queue.claim_next(self.worker_id)
        if job is None:
            return RunOutcome(processed=False)
        log.info("claimed %s", job.job_id)

        try:
            data = self.store.fetch_photo_by_id(job.photo_id)
        except NotFound:
            return self._fail(job, "fetch")
        try:
            image = decode_png(data)
        except BadImage:
            return self._fail(job, "decode")
        try:
            detections = self.detector.detect(image)
        except Exception:
            log.exception("detector raised on job %s", job.job_id)
            return self._fail(job, "detect")

        result = InferenceResult(
            job_id=job.job_id,
            detections=tuple(detections),
            completed_at=self._clock(),
            detector_id=self.detector.detector_id,
        )
        try:
            self._write_result(job, result)
        except DomainError as exc:
            log.warning("exam rejected result for job %s: %s", job.job_id, exc)
            return self._fail(job, "record-result")

        try:
            self.queue.complete(job.job_id, result)
        except InvalidState:
            # lease expired mid-flight and another worker finished the job;
            # the exam already holds the identical result
            log.info("job %s finished elsewhere", job.job_id)
        log.info("completed %s detections=%d", job.job_id, len(detections))
        return RunOutcome(processed=True, job_id=job.job_id, status="complete")

    def run_loop(self, poll_interval: float = 0.5,
                 shutdown: threading.Event | None = None) -> None:
        """Poll until the shutdown event is set; exits within one interval."""
        shutdown = shutdown if shutdown is not None else threading.Event()
        while not shutdown.is_set():
            try:
                outcome = self.run_once()
            except StorageFailure as exc:
                log.error("store unreachable, backing off: %s", exc)
                shutdown.wait(poll_interval)
                continue
            if not outcome.processed:
                shutdown.wait(poll_interval)

    def _write_result(self, job: Job, result: InferenceResult) -> None:
        for _ in range(_CAS_RETRIES):
            exam, version = self.store.load_exam(job.exam_id)
            updated = record_result(exam, job.side, result)
            if updated is exam:
                return  # identical result already recorded (retried job)
            try:
                self.store.save_exam(updated, version)
                return
            except VersionConflict:
                continue
        raise StorageFailure(
            f"gave up writing result for job {job.job_id} after "
            f"{_CAS_RETRIES} version conflicts")

    def _fail(self, job: Job, reason: str) -> RunOutcome:
        failed = self.queue.fail(job.job_id, reason, self.max_attempts)
        log.warning("failed %s reason=%s", job.job_id, reason)
        status = "failed" if failed.state.value == "failed" else "requeued"
        return RunOutcome(processed=True, job_id=job.job_id, status=status)
