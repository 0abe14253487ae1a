from __future__ import annotations

import itertools
from pathlib import Path

import pytest

from footscan.config import ServiceConfig
from footscan.domain import (
    BlobRef,
    FootSide,
    PhotographMeta,
    new_exam,
    record_foot_details,
)
from footscan.jobs import JobQueue
from footscan.store import Store, StoreConfig


@pytest.fixture
def store(tmp_path: Path) -> Store:
    return Store(StoreConfig(data_path=tmp_path / "footscan.db",
                             object_store_root=tmp_path / "blobs"))


@pytest.fixture
def object_store(tmp_path: Path) -> Store:
    return Store(StoreConfig(data_path=tmp_path / "objstore.db",
                             blob_strategy="object_store",
                             object_store_root=tmp_path / "objblobs"))


@pytest.fixture
def queue(store: Store) -> JobQueue:
    return JobQueue(store)


@pytest.fixture
def service_config(tmp_path: Path) -> ServiceConfig:
    return ServiceConfig(data_dir=tmp_path / "service", token="test-token",
                         max_photo_bytes=200_000)


def make_meta(photo_id: str = "photo-1", width: int = 100, height: int = 100,
              byte_size: int = 61_440, strategy: str = "inline",
              uploaded_at: float = 1_000.0) -> PhotographMeta:
    return PhotographMeta(photo_id=photo_id,
                          blob=BlobRef(strategy=strategy, key=photo_id),
                          width=width, height=height, byte_size=byte_size,
                          uploaded_at=uploaded_at)


def exam_with_details(side: FootSide = FootSide.LEFT, checked: bool = True,
                      count: int = 1):
    from footscan.domain import PatientRef
    exam = new_exam(PatientRef.for_patient("P001"), exam_id="exam-1", now=100.0)
    return record_foot_details(exam, side, checked, count)


_counter = itertools.count(1)


def fake_clock(start: float = 1_000.0, step: float = 1.0):
    """Deterministic monotonically increasing clock."""
    state = itertools.count()
    return lambda: start + step * next(state)


def fake_ids(prefix: str = "id"):
    state = itertools.count(1)
    return lambda: f"{prefix}-{next(state):04d}"
