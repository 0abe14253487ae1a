"""Self-hostable triage service for remote foot-ulcer photo screening."""

from .config import SERVER_VERSION, ServiceConfig, VersionPolicy
from .detector import DetectorConfig, RednessBlobDetector, detect, iou, nms
from .domain import (
    BlobRef,
    BoundingBox,
    ConfirmationRecord,
    Detection,
    ExamRecord,
    ExamState,
    FootRecord,
    FootSide,
    InferenceResult,
    PatientRef,
    PhotographMeta,
    attach_photo,
    complete_exam,
    new_exam,
    record_confirmation,
    record_foot_details,
    record_result,
)
from .images import RasterImage, decode_png, encode_png
from .jobs import Job, JobQueue, JobState, QueueStats
from .store import Store, StoreConfig
from .worker import InferenceWorker

__all__ = [
    "SERVER_VERSION",
    "ServiceConfig",
    "VersionPolicy",
    "DetectorConfig",
    "RednessBlobDetector",
    "detect",
    "iou",
    "nms",
    "BlobRef",
    "BoundingBox",
    "ConfirmationRecord",
    "Detection",
    "ExamRecord",
    "ExamState",
    "FootRecord",
    "FootSide",
    "InferenceResult",
    "PatientRef",
    "PhotographMeta",
    "attach_photo",
    "complete_exam",
    "new_exam",
    "record_confirmation",
    "record_foot_details",
    "record_result",
    "RasterImage",
    "decode_png",
    "encode_png",
    "Job",
    "JobQueue",
    "JobState",
    "QueueStats",
    "Store",
    "StoreConfig",
    "InferenceWorker",
]
