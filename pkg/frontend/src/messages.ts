/** Human-readable banner text for server error codes. */

const MESSAGES: Record<string, string> = {
  DuplicateUpload:
    "A photograph has already been uploaded for this foot — photographs cannot be retaken or replaced.",
  CheckedLocked:
    "The examined tickbox is locked once this foot's photograph has been uploaded.",
  DetailsLocked:
    "Foot details are locked once this foot's photograph has been uploaded.",
  NoFootDetails: "Record this foot's details before uploading a photograph.",
  NoPhoto: "No photograph has been uploaded for this foot yet.",
  NoResult: "The analysis result has not arrived for this foot yet.",
  DuplicateResult: "A result is already recorded for this foot.",
  DuplicateConfirmation: "This result has already been confirmed.",
  NothingRecorded: "Record at least one foot before completing the examination.",
  PendingInference:
    "A photograph is still being analysed — wait for its result before completing.",
  PendingConfirmation:
    "Confirm every analysed photograph before completing the examination.",
  ExamCompleted: "This examination is already complete and cannot be changed.",
  NegativeCount: "The number of visible ulcers cannot be negative.",
  BadImage: "That file is not a usable PNG photograph.",
  TooLarge: "That photograph is too large to upload.",
  UnknownPatient: "No patient is registered under that identifier.",
  MalformedVersion: "The app sent an invalid version string.",
  Unauthorized: "The configured access token was rejected by the server.",
  VersionConflict:
    "Someone else changed this examination at the same time — the latest state has been reloaded.",
  StorageFailure: "The server's storage is currently unavailable.",
};

export function messageFor(errorCode: string, fallback: string): string {
  return MESSAGES[errorCode] ?? `${fallback} (${errorCode})`;
}
