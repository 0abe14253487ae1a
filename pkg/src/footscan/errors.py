"""Typed error hierarchy shared by the domain, storage, queue and HTTP layers.

Every rejection is a distinct exception type so callers (and the wire
protocol) can tell rejection causes apart; nothing fails silently. The
class name doubles as the machine-readable error code on the API.
"""


class FootscanError(Exception):
    """Base class for every error raised by this package."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- exam workflow ---------------------------------------------------------

class DomainError(FootscanError):
    """An exam-workflow rule rejected the operation."""


class ExamCompleted(DomainError):
    pass


class CheckedLocked(DomainError):
    pass


class DetailsLocked(DomainError):
    pass


class NegativeCount(DomainError):
    pass


class NoFootDetails(DomainError):
    pass


class DuplicateUpload(DomainError):
    pass


class NoPhoto(DomainError):
    pass


class DuplicateResult(DomainError):
    pass


class NoResult(DomainError):
    pass


class DuplicateConfirmation(DomainError):
    pass


class NothingRecorded(DomainError):
    pass


class PendingInference(DomainError):
    pass


class PendingConfirmation(DomainError):
    pass


# --- detector --------------------------------------------------------------

class DetectorError(FootscanError):
    pass


class ZeroSizeImage(DetectorError):
    pass


class BadImage(FootscanError):
    """Upload is not a decodable PNG."""


# --- storage ---------------------------------------------------------------

class StorageError(FootscanError):
    pass


class VersionConflict(StorageError):
    """Compare-and-swap lost: another writer committed first."""


class NotFound(StorageError):
    pass


class UnknownPatient(StorageError):
    pass


class TooLarge(StorageError):
    pass


class DuplicatePhotoId(StorageError):
    pass


class StorageFailure(StorageError):
    """The store itself is unreachable or failing, not a logical rejection."""


# --- job queue -------------------------------------------------------------

class QueueError(FootscanError):
    pass


class DuplicateJob(QueueError):
    pass


class UnknownPhoto(QueueError):
    pass


class InvalidState(QueueError):
    pass


# --- api -------------------------------------------------------------------

class Unauthorized(FootscanError):
    pass


class MalformedVersion(FootscanError):
    pass


# --- client ----------------------------------------------------------------

class ClientError(FootscanError):
    pass


class ConnectionFailed(ClientError):
    pass


class IncompatibleVersion(ClientError):
    pass


class JobFailed(ClientError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class Timeout(ClientError):
    pass


class ApiError(ClientError):
    """A server-side rejection surfaced through the HTTP client."""

    def __init__(self, status: int, error_code: str, message: str):
        super().__init__(f"{status} {error_code}: {message}")
        self.status = status
        self.error_code = error_code
        self.message = message
