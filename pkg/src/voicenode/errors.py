"""Error types shared across the node.

Every error carries a stable machine code (the ``error`` field of the
HTTP error envelope) and the HTTP status it maps to when it crosses the
API boundary. Modules raise these directly; the HTTP layer only
translates, it never invents statuses.
"""


class NodeError(Exception):
    """Base class for all node errors."""

    code = "internal"
    http_status = 500

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


# -- validation (400) -------------------------------------------------------

class ValidationError(NodeError):
    code = "validation"
    http_status = 400


class WeakPassword(ValidationError):
    code = "weak_password"


class SelfFollow(ValidationError):
    code = "self_follow"


class BadKeyLength(ValidationError):
    code = "bad_key_length"


class BadCursor(ValidationError):
    code = "bad_cursor"


class RangeOutOfBounds(ValidationError):
    code = "range_out_of_bounds"


# -- auth (401) --------------------------------------------------------------

class AuthError(NodeError):
    code = "auth"
    http_status = 401


class InvalidCredentials(AuthError):
    code = "invalid_credentials"


# -- not found (404) ---------------------------------------------------------

class NotFound(NodeError):
    code = "not_found"
    http_status = 404


class UnknownUser(NotFound):
    code = "unknown_user"


class UnknownPost(NotFound):
    code = "unknown_post"


# -- conflict (409) ----------------------------------------------------------

class Conflict(NodeError):
    code = "conflict"
    http_status = 409


class UsernameTaken(Conflict):
    code = "username_taken"


# -- too large (413) ---------------------------------------------------------

class TooLarge(NodeError):
    code = "too_large"
    http_status = 413


class PayloadTooLarge(TooLarge):
    code = "payload_too_large"


# -- unsupported media / language (422) ---------------------------------------

class Unsupported(NodeError):
    code = "unsupported"
    http_status = 422


class UnsupportedLanguage(Unsupported):
    code = "unsupported_language"


class NotRiff(Unsupported):
    code = "not_riff"


class UnsupportedEncoding(Unsupported):
    code = "unsupported_encoding"


class TooLong(Unsupported):
    code = "too_long"


class TruncatedChunk(Unsupported):
    code = "truncated_chunk"


class NoTranscriptChunk(Unsupported):
    code = "no_transcript_chunk"


# -- engine (503) --------------------------------------------------------------

class EngineUnavailable(NodeError):
    code = "engine_unavailable"
    http_status = 503


# -- storage / ledger (500) ----------------------------------------------------

class StorageFailure(NodeError):
    code = "storage_failure"


class Unwritable(StorageFailure):
    code = "unwritable"


class SchemaMismatch(StorageFailure):
    code = "schema_mismatch"


class CorruptBlob(StorageFailure):
    code = "corrupt_blob"
