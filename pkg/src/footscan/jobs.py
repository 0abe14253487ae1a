"""Persistent FIFO inference queue with atomic claim semantics.

Jobs live in the store's jobs table and are never deleted; their lifecycle
is pending -> in_progress -> complete | failed, with failed-but-retryable
jobs returning to pending while keeping their original seq. "Oldest
incomplete first" therefore stays true across retries. A claimed job whose
worker goes silent becomes claimable again once its lease expires.
"""

from __future__ import annotations

import enum
import json
import time
import uuid
from dataclasses import dataclass
from typing import Callable, Optional

from .domain import FootSide, InferenceResult, result_from_dict, result_to_dict
from .errors import DuplicateJob, InvalidState, NotFound, UnknownPhoto
from .store import Store


class JobState(str, enum.Enum):
    PENDING = "pending"
    IN_PROGRESS = "in_progress"
    COMPLETE = "complete"
    FAILED = "failed"


@dataclass(frozen=True)
class Job:
    job_id: str
    seq: int
    exam_id: str
    side: FootSide
    photo_id: str
    state: JobState
    attempts: int
    enqueued_at: float
    worker_id: Optional[str] = None
    claimed_at: Optional[float] = None
    finished_at: Optional[float] = None
    result: Optional[InferenceResult] = None
    failure_reason: Optional[str] = None


@dataclass(frozen=True)
class QueueStats:
    pending: int = 0
    in_progress: int = 0
    complete: int = 0
    failed: int = 0

    @property
    def total(self) -> int:
        return self.pending + self.in_progress + self.complete + self.failed


_COLUMNS = ("job_id, seq, exam_id, side, photo_id, state, attempts, "
            "enqueued_at, worker_id, claimed_at, finished_at, result, "
            "failure_reason")


class JobQueue:
    """FIFO queue over the store's jobs table."""

    def __init__(self, store: Store, lease_seconds: float = 60.0,
                 clock: Callable[[], float] = time.time):
        self.store = store
        self.lease_seconds = lease_seconds
        self._clock = clock

    def enqueue(self, exam_id: str, side: FootSide, photo_id: str) -> Job:
        """Add one inference request; at most one live job per foot."""
        with self.store.transaction() as conn:
            if conn.execute("SELECT 1 FROM photos WHERE photo_id = ?",
                            (photo_id,)).fetchone() is None:
                raise UnknownPhoto(f"photo {photo_id} not stored")
            live = conn.execute(
                "SELECT job_id FROM jobs WHERE exam_id = ? AND side = ? "
                "AND state IN ('pending', 'in_progress') LIMIT 1",
                (exam_id, side.value)).fetchone()
            if live is not None:
                raise DuplicateJob(
                    f"job {live[0]} already live for {exam_id}/{side.value}")
            job_id = uuid.uuid4().hex
            cur = conn.execute(
                "INSERT INTO jobs (job_id, exam_id, side, photo_id, state,"
                " attempts, enqueued_at) VALUES (?, ?, ?, ?, 'pending', 0, ?)",
                (job_id, exam_id, side.value, photo_id, self._clock()))
            seq = cur.lastrowid
            row = conn.execute(
                f"SELECT {_COLUMNS} FROM jobs WHERE seq = ?", (seq,)).fetchone()
        return _job_from_row(row)

    def claim_next(self, worker_id: str) -> Job | None:
        """Atomically claim the oldest incomplete job, if any.

        Claimable means pending, or in_progress with an expired lease
        (worker presumed dead). Returns None on an empty queue, which is a
        normal outcome for a polling worker.
        """
        now = self._clock()
        stale_before = now - self.lease_seconds
        with self.store.transaction() as conn:
            row = conn.execute(
                "SELECT seq FROM jobs WHERE state = 'pending' "
                "OR (state = 'in_progress' AND claimed_at <= ?) "
                "ORDER BY seq LIMIT 1", (stale_before,)).fetchone()
            if row is None:
                return None
            seq = row[0]
            conn.execute(
                "UPDATE jobs SET state = 'in_progress', worker_id = ?, "
                "claimed_at = ?, attempts = attempts + 1 WHERE seq = ?",
                (worker_id, now, seq))
            claimed = conn.execute(
                f"SELECT {_COLUMNS} FROM jobs WHERE seq = ?", (seq,)).fetchone()
        return _job_from_row(claimed)

    def complete(self, job_id: str, result: InferenceResult) -> Job:
        with self.store.transaction() as conn:
            state = self._state_of(conn, job_id)
            if state is not JobState.IN_PROGRESS:
                raise InvalidState(
                    f"job {job_id} is {state.value}, expected in_progress")
            conn.execute(
                "UPDATE jobs SET state = 'complete', result = ?, "
                "finished_at = ? WHERE job_id = ?",
                (json.dumps(result_to_dict(result)), self._clock(), job_id))
            row = self._fetch(conn, job_id)
        return _job_from_row(row)

    def fail(self, job_id: str, reason: str, max_attempts: int = 3) -> Job:
        """Requeue a failed attempt, or park the job once attempts run out."""
        with self.store.transaction() as conn:
            state = self._state_of(conn, job_id)
            if state is not JobState.IN_PROGRESS:
                raise InvalidState(
                    f"job {job_id} is {state.value}, expected in_progress")
            attempts = conn.execute(
                "SELECT attempts FROM jobs WHERE job_id = ?",
                (job_id,)).fetchone()[0]
            if attempts < max_attempts:
                # original seq is kept, so the retry stays oldest-first
                conn.execute(
                    "UPDATE jobs SET state = 'pending', worker_id = NULL, "
                    "claimed_at = NULL WHERE job_id = ?", (job_id,))
            else:
                conn.execute(
                    "UPDATE jobs SET state = 'failed', failure_reason = ?, "
                    "finished_at = ? WHERE job_id = ?",
                    (reason, self._clock(), job_id))
            row = self._fetch(conn, job_id)
        return _job_from_row(row)

    def get(self, job_id: str) -> Job:
        row = self.store.read_one(
            f"SELECT {_COLUMNS} FROM jobs WHERE job_id = ?", (job_id,))
        if row is None:
            raise NotFound(f"job {job_id} not found")
        return _job_from_row(row)

    def stats(self) -> QueueStats:
        counts = dict(self.store.read_all(
            "SELECT state, COUNT(*) FROM jobs GROUP BY state"))
        return QueueStats(
            pending=counts.get("pending", 0),
            in_progress=counts.get("in_progress", 0),
            complete=counts.get("complete", 0),
            failed=counts.get("failed", 0),
        )

    def _state_of(self, conn, job_id: str) -> JobState:
        row = conn.execute("SELECT state FROM jobs WHERE job_id = ?",
                           (job_id,)).fetchone()
        if row is None:
            raise NotFound(f"job {job_id} not found")
        return JobState(row[0])

    def _fetch(self, conn, job_id: str):
        return conn.execute(
            f"SELECT {_COLUMNS} FROM jobs WHERE job_id = ?", (job_id,)).fetchone()


def _job_from_row(row) -> Job:
    (job_id, seq, exam_id, side, photo_id, state, attempts, enqueued_at,
     worker_id, claimed_at, finished_at, result, failure_reason) = row
    return Job(
        job_id=job_id,
        seq=seq,
        exam_id=exam_id,
        side=FootSide(side),
        photo_id=photo_id,
        state=JobState(state),
        attempts=attempts,
        enqueued_at=enqueued_at,
        worker_id=worker_id,
        claimed_at=claimed_at,
        finished_at=finished_at,
        result=result_from_dict(json.loads(result)) if result else None,
        failure_reason=failure_reason,
    )
