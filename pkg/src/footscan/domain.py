"""Exam workflow domain model.

Pure value semantics: every operation takes an exam record and returns a
new one or raises a typed error, leaving the input untouched. Nothing here
knows about HTTP, storage or clocks beyond the timestamps it is handed.

The four clinic rules enforced per foot:
  * a photo can never be replaced once attached,
  * a second upload for the same foot is rejected,
  * the "checked" tickbox is frozen once that foot has a photo,
  * the visible-ulcer count is frozen once that foot has a photo.
"""

from __future__ import annotations

import enum
import time
import uuid
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional

from .errors import (
    CheckedLocked,
    DetailsLocked,
    DuplicateConfirmation,
    DuplicateResult,
    DuplicateUpload,
    ExamCompleted,
    NegativeCount,
    NoFootDetails,
    NoPhoto,
    NoResult,
    NothingRecorded,
    PendingConfirmation,
    PendingInference,
)


def new_id() -> str:
    return uuid.uuid4().hex


class FootSide(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class ExamState(str, enum.Enum):
    OPEN = "open"
    COMPLETED = "completed"


@dataclass(frozen=True)
class PatientRef:
    patient_id: str
    qr_payload: str

    def __post_init__(self) -> None:
        if not self.patient_id:
            raise ValueError("patient_id must be non-empty")

    @classmethod
    def for_patient(cls, patient_id: str) -> "PatientRef":
        # QR payload is the plain patient id; scanning and manual entry
        # therefore carry the same string.
        return cls(patient_id=patient_id, qr_payload=patient_id)


@dataclass(frozen=True)
class BlobRef:
    """Strategy-tagged handle to stored photo bytes."""

    strategy: str  # "inline" | "object_store"
    key: str

    def __post_init__(self) -> None:
        if self.strategy not in ("inline", "object_store"):
            raise ValueError(f"unknown blob strategy {self.strategy!r}")
        if not self.key:
            raise ValueError("blob key must be non-empty")


@dataclass(frozen=True)
class PhotographMeta:
    photo_id: str
    blob: BlobRef
    width: int
    height: int
    byte_size: int
    uploaded_at: float

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("photo dimensions must be >= 1")
        if self.byte_size < 1:
            raise ValueError("photo byte_size must be >= 1")


@dataclass(frozen=True)
class BoundingBox:
    left: int
    top: int
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.left < 0 or self.top < 0:
            raise ValueError("box origin must be non-negative")
        if self.width < 1 or self.height < 1:
            raise ValueError("box sides must be >= 1")

    @property
    def right(self) -> int:
        return self.left + self.width

    @property
    def bottom(self) -> int:
        return self.top + self.height

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


def detection_sort_key(d: Detection) -> tuple:
    return (-d.confidence, d.box.top, d.box.left)


@dataclass(frozen=True)
class InferenceResult:
    job_id: str
    detections: tuple[Detection, ...]
    completed_at: float
    detector_id: str

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.detections, key=detection_sort_key))
        if ordered != self.detections:
            raise ValueError(
                "detections must be sorted by confidence desc, ties by (top, left)"
            )

    def same_payload(self, other: "InferenceResult") -> bool:
        """True when the analysis content matches, ignoring wall-clock.

        A retried job recomputes the identical detections (the detector is
        pure) but at a later completed_at; such writes are equivalent.
        """
        return (
            self.job_id == other.job_id
            and self.detector_id == other.detector_id
            and self.detections == other.detections
        )


@dataclass(frozen=True)
class ConfirmationRecord:
    agrees: bool
    recorded_at: float


@dataclass(frozen=True)
class FootRecord:
    side: FootSide
    checked: bool
    visible_ulcer_count: int
    photo: Optional[PhotographMeta] = None
    result: Optional[InferenceResult] = None
    confirmation: Optional[ConfirmationRecord] = None

    def __post_init__(self) -> None:
        if self.visible_ulcer_count < 0:
            raise ValueError("visible_ulcer_count must be >= 0")
        if self.result is not None and self.photo is None:
            raise ValueError("result requires a photo")
        if self.confirmation is not None and self.result is None:
            raise ValueError("confirmation requires a result")


@dataclass(frozen=True)
class ExamRecord:
    exam_id: str
    patient: PatientRef
    feet: Mapping[FootSide, FootRecord] = field(default_factory=dict)
    state: ExamState = ExamState.OPEN
    created_at: float = 0.0
    completed_at: Optional[float] = None

    def foot(self, side: FootSide) -> Optional[FootRecord]:
        return self.feet.get(side)

    def _with_foot(self, foot: FootRecord) -> "ExamRecord":
        feet = dict(self.feet)
        feet[foot.side] = foot
        return replace(self, feet=feet)


def new_exam(patient: PatientRef, exam_id: str | None = None,
             now: float | None = None) -> ExamRecord:
    return ExamRecord(
        exam_id=exam_id or new_id(),
        patient=patient,
        created_at=time.time() if now is None else now,
    )


def _require_open(exam: ExamRecord) -> None:
    if exam.state is ExamState.COMPLETED:
        raise ExamCompleted(f"exam {exam.exam_id} is completed")


def record_foot_details(exam: ExamRecord, side: FootSide, checked: bool,
                        visible_ulcer_count: int) -> ExamRecord:
    """Create or update the clinician's entries for one foot.

    Both the tickbox and the count stay editable only until that foot's
    photo is attached. Re-submitting identical values after the photo is a
    harmless no-op (idempotent retry); changing either is rejected.
    """
    _require_open(exam)
    if visible_ulcer_count < 0:
        raise NegativeCount("visible_ulcer_count must be >= 0")
    foot = exam.foot(side)
    if foot is None:
        return exam._with_foot(
            FootRecord(side=side, checked=checked,
                       visible_ulcer_count=visible_ulcer_count))
    if foot.photo is not None:
        if foot.checked != checked:
            raise CheckedLocked(
                f"{side.value} checked tickbox is locked after photo upload")
        if foot.visible_ulcer_count != visible_ulcer_count:
            raise DetailsLocked(
                f"{side.value} ulcer count is locked after photo upload")
        return exam
    return exam._with_foot(
        replace(foot, checked=checked, visible_ulcer_count=visible_ulcer_count))


def attach_photo(exam: ExamRecord, side: FootSide,
                 meta: PhotographMeta) -> ExamRecord:
    """Attach the single permitted photograph for one foot."""
    _require_open(exam)
    foot = exam.foot(side)
    if foot is None:
        raise NoFootDetails(f"no details recorded for {side.value} foot")
    if foot.photo is not None:
        raise DuplicateUpload(
            f"{side.value} foot already has photo {foot.photo.photo_id}")
    return exam._with_foot(replace(foot, photo=meta))


def record_result(exam: ExamRecord, side: FootSide,
                  result: InferenceResult) -> ExamRecord:
    """Store the detector output for one foot's photo.

    A write carrying the same job_id, detector and detections as the stored
    result is accepted unchanged, so a retried inference job can never
    wedge on its own earlier success.
    """
    _require_open(exam)
    foot = exam.foot(side)
    if foot is None or foot.photo is None:
        raise NoPhoto(f"no photo to analyse for {side.value} foot")
    if foot.result is not None:
        if foot.result.same_payload(result):
            return exam
        raise DuplicateResult(
            f"{side.value} foot already has a result from job {foot.result.job_id}")
    return exam._with_foot(replace(foot, result=result))


def record_confirmation(exam: ExamRecord, side: FootSide, agrees: bool,
                        now: float | None = None) -> ExamRecord:
    """Record the clinician's agreement with the inference result."""
    _require_open(exam)
    foot = exam.foot(side)
    if foot is None or foot.result is None:
        raise NoResult(f"no result to confirm for {side.value} foot")
    if foot.confirmation is not None:
        raise DuplicateConfirmation(
            f"{side.value} foot confirmation already recorded")
    confirmation = ConfirmationRecord(
        agrees=agrees, recorded_at=time.time() if now is None else now)
    return exam._with_foot(replace(foot, confirmation=confirmation))


def complete_exam(exam: ExamRecord, now: float | None = None) -> ExamRecord:
    """Close the exam; requires every photographed foot fully adjudicated."""
    _require_open(exam)
    if not exam.feet:
        raise NothingRecorded("no foot details recorded")
    for foot in exam.feet.values():
        if foot.photo is not None and foot.result is None:
            raise PendingInference(
                f"{foot.side.value} foot photo has no inference result yet")
        if foot.result is not None and foot.confirmation is None:
            raise PendingConfirmation(
                f"{foot.side.value} foot result has no confirmation yet")
    return replace(exam, state=ExamState.COMPLETED,
                   completed_at=time.time() if now is None else now)


# --- JSON codec -------------------------------------------------------------
# The dict form below is the storage format and the API view; round-trips
# must be exact, so timestamps stay as epoch floats.

def detection_to_dict(d: Detection) -> dict[str, Any]:
    return {
        "left": d.box.left,
        "top": d.box.top,
        "width": d.box.width,
        "height": d.box.height,
        "confidence": d.confidence,
    }


def detection_from_dict(data: Mapping[str, Any]) -> Detection:
    return Detection(
        box=BoundingBox(left=data["left"], top=data["top"],
                        width=data["width"], height=data["height"]),
        confidence=data["confidence"],
    )


def result_to_dict(r: InferenceResult) -> dict[str, Any]:
    return {
        "job_id": r.job_id,
        "detector_id": r.detector_id,
        "completed_at": r.completed_at,
        "detections": [detection_to_dict(d) for d in r.detections],
    }


def result_from_dict(data: Mapping[str, Any]) -> InferenceResult:
    return InferenceResult(
        job_id=data["job_id"],
        detector_id=data["detector_id"],
        completed_at=data["completed_at"],
        detections=tuple(detection_from_dict(d) for d in data["detections"]),
    )


def _photo_to_dict(p: PhotographMeta) -> dict[str, Any]:
    return {
        "photo_id": p.photo_id,
        "blob": {"strategy": p.blob.strategy, "key": p.blob.key},
        "width": p.width,
        "height": p.height,
        "byte_size": p.byte_size,
        "uploaded_at": p.uploaded_at,
    }


def _photo_from_dict(data: Mapping[str, Any]) -> PhotographMeta:
    return PhotographMeta(
        photo_id=data["photo_id"],
        blob=BlobRef(strategy=data["blob"]["strategy"], key=data["blob"]["key"]),
        width=data["width"],
        height=data["height"],
        byte_size=data["byte_size"],
        uploaded_at=data["uploaded_at"],
    )


def foot_to_dict(foot: FootRecord) -> dict[str, Any]:
    return {
        "side": foot.side.value,
        "checked": foot.checked,
        "visible_ulcer_count": foot.visible_ulcer_count,
        "photo": _photo_to_dict(foot.photo) if foot.photo else None,
        "result": result_to_dict(foot.result) if foot.result else None,
        "confirmation": (
            {"agrees": foot.confirmation.agrees,
             "recorded_at": foot.confirmation.recorded_at}
            if foot.confirmation else None
        ),
    }


def _foot_from_dict(data: Mapping[str, Any]) -> FootRecord:
    confirmation = data.get("confirmation")
    return FootRecord(
        side=FootSide(data["side"]),
        checked=data["checked"],
        visible_ulcer_count=data["visible_ulcer_count"],
        photo=_photo_from_dict(data["photo"]) if data.get("photo") else None,
        result=result_from_dict(data["result"]) if data.get("result") else None,
        confirmation=(
            ConfirmationRecord(agrees=confirmation["agrees"],
                               recorded_at=confirmation["recorded_at"])
            if confirmation else None
        ),
    )


def exam_to_dict(exam: ExamRecord) -> dict[str, Any]:
    return {
        "exam_id": exam.exam_id,
        "patient": {
            "patient_id": exam.patient.patient_id,
            "qr_payload": exam.patient.qr_payload,
        },
        "state": exam.state.value,
        "created_at": exam.created_at,
        "completed_at": exam.completed_at,
        "feet": {
            side.value: (foot_to_dict(exam.feet[side])
                         if side in exam.feet else None)
            for side in FootSide
        },
    }


def exam_from_dict(data: Mapping[str, Any]) -> ExamRecord:
    feet = {}
    for side in FootSide:
        raw = data["feet"].get(side.value)
        if raw is not None:
            feet[side] = _foot_from_dict(raw)
    return ExamRecord(
        exam_id=data["exam_id"],
        patient=PatientRef(patient_id=data["patient"]["patient_id"],
                           qr_payload=data["patient"]["qr_payload"]),
        feet=feet,
        state=ExamState(data["state"]),
        created_at=data["created_at"],
        completed_at=data.get("completed_at"),
    )
