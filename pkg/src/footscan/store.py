"""Durable storage for patients, exams, photographs and jobs.

Backed by an embedded sqlite database in WAL mode: versioned
compare-and-swap writes for exam records, a jobs table the queue layer
operates on, and photo blobs stored under one of two strategies:

  inline        bytes live in a BLOB column next to the records
  object_store  bytes live on disk as <root>/<first-2-hex-of-key>/<key>.bin

Both strategies sit behind the same interface so they can be swapped by
configuration and compared directly.
"""

from __future__ import annotations

import csv
import json
import re
import sqlite3
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

from .domain import BlobRef, ExamRecord, PatientRef, exam_from_dict, exam_to_dict
from .errors import (
    DuplicatePhotoId,
    NotFound,
    StorageFailure,
    TooLarge,
    VersionConflict,
)

_KEY_RE = re.compile(r"[A-Za-z0-9_-]+")

_SCHEMA = """
CREATE TABLE IF NOT EXISTS patients (
    patient_id TEXT PRIMARY KEY,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS exams (
    exam_id TEXT PRIMARY KEY,
    version INTEGER NOT NULL,
    body    TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS photos (
    photo_id    TEXT PRIMARY KEY,
    strategy    TEXT NOT NULL,
    inline_bytes BLOB,
    byte_size   INTEGER NOT NULL,
    stored_at   REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS jobs (
    seq         INTEGER PRIMARY KEY AUTOINCREMENT,
    job_id      TEXT UNIQUE NOT NULL,
    exam_id     TEXT NOT NULL,
    side        TEXT NOT NULL,
    photo_id    TEXT NOT NULL,
    state       TEXT NOT NULL,
    attempts    INTEGER NOT NULL DEFAULT 0,
    worker_id   TEXT,
    enqueued_at REAL NOT NULL,
    claimed_at  REAL,
    finished_at REAL,
    result      TEXT,
    failure_reason TEXT
);
"""


@dataclass(frozen=True)
class StoreConfig:
    data_path: Path
    blob_strategy: str = "inline"
    object_store_root: Path | None = None
    max_photo_bytes: int = 5_242_880

    def __post_init__(self) -> None:
        if self.blob_strategy not in ("inline", "object_store"):
            raise ValueError(f"unknown blob strategy {self.blob_strategy!r}")
        if self.blob_strategy == "object_store" and self.object_store_root is None:
            raise ValueError("object_store strategy requires object_store_root")
        if self.max_photo_bytes < 1:
            raise ValueError("max_photo_bytes must be >= 1")


class Store:
    """One sqlite-backed store; safe for concurrent threads and processes.

    Each thread gets its own connection (sqlite requirement); writers are
    serialized by BEGIN IMMEDIATE transactions, so every mutation here is
    an atomic compare-and-swap or insert.
    """

    def __init__(self, config: StoreConfig, clock: Callable[[], float] = time.time):
        self.config = config
        self._clock = clock
        self._local = threading.local()
        self._all_conns: list[sqlite3.Connection] = []
        self._conns_lock = threading.Lock()
        self._closed = False
        Path(config.data_path).parent.mkdir(parents=True, exist_ok=True)
        # executescript manages its own commit; don't wrap it in a txn
        self.connection().executescript(_SCHEMA)

    # -- connection plumbing -------------------------------------------------

    def connection(self) -> sqlite3.Connection:
        if self._closed:
            raise StorageFailure("store is closed")
        conn = getattr(self._local, "conn", None)
        if conn is None:
            conn = sqlite3.connect(str(self.config.data_path), timeout=30.0,
                                   isolation_level=None)
            conn.execute("PRAGMA journal_mode=WAL")
            conn.execute("PRAGMA synchronous=NORMAL")
            self._local.conn = conn
            with self._conns_lock:
                self._all_conns.append(conn)
        return conn

    @contextmanager
    def transaction(self) -> Iterator[sqlite3.Connection]:
        """Serialized write transaction; raises StorageFailure when the
        database itself is unusable (as opposed to a logical rejection)."""
        conn = self.connection()
        try:
            conn.execute("BEGIN IMMEDIATE")
        except sqlite3.Error as exc:
            raise StorageFailure(f"cannot begin transaction: {exc}") from exc
        try:
            yield conn
        except BaseException as exc:
            try:
                conn.execute("ROLLBACK")
            except sqlite3.Error:
                pass  # keep the original failure
            if isinstance(exc, sqlite3.Error):
                raise StorageFailure(f"transaction failed: {exc}") from exc
            raise
        try:
            conn.execute("COMMIT")
        except sqlite3.Error as exc:
            raise StorageFailure(f"commit failed: {exc}") from exc

    def read_one(self, sql: str, params: tuple = ()) -> tuple | None:
        """Single-row read; storage trouble surfaces as StorageFailure."""
        try:
            return self.connection().execute(sql, params).fetchone()
        except sqlite3.Error as exc:
            raise StorageFailure(f"read failed: {exc}") from exc

    def read_all(self, sql: str, params: tuple = ()) -> list[tuple]:
        try:
            return self.connection().execute(sql, params).fetchall()
        except sqlite3.Error as exc:
            raise StorageFailure(f"read failed: {exc}") from exc

    def ping(self) -> None:
        try:
            self.connection().execute("SELECT 1").fetchone()
        except Exception as exc:
            raise StorageFailure(f"store unreachable: {exc}") from exc

    def close(self) -> None:
        self._closed = True
        with self._conns_lock:
            for conn in self._all_conns:
                try:
                    conn.close()
                except sqlite3.Error:
                    pass
            self._all_conns.clear()
        self._local = threading.local()

    # -- patients ------------------------------------------------------------

    def add_patient(self, patient_id: str) -> PatientRef:
        patient = PatientRef.for_patient(patient_id)
        with self.transaction() as conn:
            conn.execute(
                "INSERT OR IGNORE INTO patients (patient_id, created_at) VALUES (?, ?)",
                (patient_id, self._clock()))
        return patient

    def get_patient(self, patient_id: str) -> PatientRef | None:
        row = self.read_one(
            "SELECT patient_id FROM patients WHERE patient_id = ?",
            (patient_id,))
        return PatientRef.for_patient(row[0]) if row else None

    # -- exams (versioned CAS) -----------------------------------------------

    def save_exam(self, exam: ExamRecord, expected_version: int) -> int:
        body = json.dumps(exam_to_dict(exam))
        with self.transaction() as conn:
            if expected_version == 0:
                try:
                    conn.execute(
                        "INSERT INTO exams (exam_id, version, body) VALUES (?, 1, ?)",
                        (exam.exam_id, body))
                except sqlite3.IntegrityError as exc:
                    raise VersionConflict(
                        f"exam {exam.exam_id} already exists") from exc
            else:
                cur = conn.execute(
                    "UPDATE exams SET version = ?, body = ? "
                    "WHERE exam_id = ? AND version = ?",
                    (expected_version + 1, body, exam.exam_id, expected_version))
                if cur.rowcount == 0:
                    raise VersionConflict(
                        f"exam {exam.exam_id} version != {expected_version}")
        return expected_version + 1

    def load_exam(self, exam_id: str) -> tuple[ExamRecord, int]:
        row = self.read_one(
            "SELECT body, version FROM exams WHERE exam_id = ?",
            (exam_id,))
        if row is None:
            raise NotFound(f"exam {exam_id} not found")
        return exam_from_dict(json.loads(row[0])), row[1]

    # -- photographs ---------------------------------------------------------

    def store_photo(self, data: bytes, photo_id: str) -> BlobRef:
        if not _KEY_RE.fullmatch(photo_id):
            raise ValueError(f"photo_id {photo_id!r} must be [A-Za-z0-9_-]+")
        if len(data) < 1:
            raise ValueError("photo payload must be at least 1 byte")
        if len(data) > self.config.max_photo_bytes:
            raise TooLarge(
                f"{len(data)} bytes exceeds cap of {self.config.max_photo_bytes}")
        strategy = self.config.blob_strategy
        inline = data if strategy == "inline" else None
        try:
            with self.transaction() as conn:
                try:
                    conn.execute(
                        "INSERT INTO photos (photo_id, strategy, inline_bytes,"
                        " byte_size, stored_at) VALUES (?, ?, ?, ?, ?)",
                        (photo_id, strategy, inline, len(data), self._clock()))
                except sqlite3.IntegrityError as exc:
                    raise DuplicatePhotoId(photo_id) from exc
                if strategy == "object_store":
                    path = self._object_path(photo_id)
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_bytes(data)
        except OSError as exc:
            raise StorageFailure(f"store_photo failed: {exc}") from exc
        return BlobRef(strategy=strategy, key=photo_id)

    def fetch_photo(self, ref: BlobRef) -> bytes:
        if ref.strategy == "inline":
            row = self.read_one(
                "SELECT inline_bytes FROM photos WHERE photo_id = ?",
                (ref.key,))
            if row is None or row[0] is None:
                raise NotFound(f"inline photo {ref.key} not found")
            return row[0]
        path = self._object_path(ref.key)
        if path is None or not path.is_file():
            raise NotFound(f"object-store photo {ref.key} not found")
        try:
            return path.read_bytes()
        except OSError as exc:
            raise StorageFailure(f"fetch_photo failed: {exc}") from exc

    def fetch_photo_by_id(self, photo_id: str) -> bytes:
        row = self.read_one(
            "SELECT strategy FROM photos WHERE photo_id = ?",
            (photo_id,))
        if row is None:
            raise NotFound(f"photo {photo_id} not found")
        return self.fetch_photo(BlobRef(strategy=row[0], key=photo_id))

    def photo_exists(self, photo_id: str) -> bool:
        return self.read_one(
            "SELECT 1 FROM photos WHERE photo_id = ?", (photo_id,)) is not None

    def _object_path(self, key: str) -> Path | None:
        root = self.config.object_store_root
        if root is None:
            return None
        return Path(root) / key[:2] / f"{key}.bin"

    # -- dataset export --------------------------------------------------------

    def export_dataset(self, destination: Path) -> int:
        """Write every stored photograph plus a CSV manifest for retraining.

        Manifest columns: photo_id, exam_id, side, visible_ulcer_count,
        detection_count, agrees. Linkage fields are blank for blobs not
        attached to any exam.
        """
        destination = Path(destination)
        linkage: dict[str, dict] = {}
        conn = self.connection()
        for (body,) in conn.execute("SELECT body FROM exams"):
            exam = json.loads(body)
            for side, foot in exam["feet"].items():
                if not foot or not foot.get("photo"):
                    continue
                result = foot.get("result")
                confirmation = foot.get("confirmation")
                linkage[foot["photo"]["photo_id"]] = {
                    "exam_id": exam["exam_id"],
                    "side": side,
                    "visible_ulcer_count": foot["visible_ulcer_count"],
                    "detection_count": len(result["detections"]) if result else 0,
                    "agrees": confirmation["agrees"] if confirmation else None,
                }
        try:
            destination.mkdir(parents=True, exist_ok=True)
            count = 0
            with open(destination / "manifest.csv", "w", newline="",
                      encoding="utf-8") as handle:
                writer = csv.writer(handle)
                writer.writerow(["photo_id", "exam_id", "side",
                                 "visible_ulcer_count", "detection_count",
                                 "agrees"])
                rows = conn.execute(
                    "SELECT photo_id FROM photos ORDER BY photo_id").fetchall()
                for (photo_id,) in rows:
                    (destination / f"{photo_id}.png").write_bytes(
                        self.fetch_photo_by_id(photo_id))
                    link = linkage.get(photo_id)
                    if link is None:
                        writer.writerow([photo_id, "", "", "", "", ""])
                    else:
                        agrees = link["agrees"]
                        writer.writerow([
                            photo_id, link["exam_id"], link["side"],
                            link["visible_ulcer_count"], link["detection_count"],
                            "" if agrees is None else str(agrees).lower(),
                        ])
                    count += 1
        except (sqlite3.Error, OSError) as exc:
            raise StorageFailure(f"export_dataset failed: {exc}") from exc
        return count
