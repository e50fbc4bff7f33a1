"""Exception hierarchy shared by every pipeline stage.

Each error carries a short machine-readable ``reason`` code next to the
human message so the CLI can emit structured errors and map exit codes.
"""

from __future__ import annotations


class MangatlError(Exception):
    """Base class for all errors raised by this package."""

    def __init__(self, reason: str, message: str = ""):
        self.reason = reason
        super().__init__(message or reason)


class ConfigError(MangatlError):
    """Invalid configuration or CLI usage (exit code 2)."""


class IngestError(MangatlError):
    """Corpus loading/import failure.

    Reasons: ``missing_asset``, ``order_conflict``, ``geometry``, ``format``.
    """


class DataError(MangatlError):
    """Well-formed corpus lacking data the caller requires.

    Reasons: ``missing_reference``.
    """


class GeometryError(MangatlError):
    """A rectangle falls outside its image."""

    def __init__(self, message: str = ""):
        super().__init__("geometry", message)


class ImageError(MangatlError):
    """Image decode/encode failure."""

    def __init__(self, message: str = ""):
        super().__init__("image", message)


class RequestError(MangatlError):
    """A translation request cannot be assembled.

    Reasons: ``missing_asset``, ``template``.
    """


class ParseError(MangatlError):
    """A model response does not match the expected grammar.

    Reasons: ``count`` (with ``got``/``expected``) and ``format``.
    Both are retryable: resending the same request may yield a
    well-formed response.
    """

    retryable = True

    def __init__(self, reason: str, message: str = "", got: int | None = None,
                 expected: int | None = None):
        self.got = got
        self.expected = expected
        if reason == "count" and not message:
            message = f"expected {expected} translations, got {got}"
        super().__init__(reason, message)


class GatewayError(MangatlError):
    """LLM backend failure.

    Reasons: ``cassette_miss``, ``backend``.
    """


class RunError(MangatlError):
    """A strategy run aborted; ``partial_run`` holds progress so far.

    Reasons: ``backend``.
    """

    def __init__(self, reason: str, message: str = "", partial_run=None):
        self.partial_run = partial_run
        super().__init__(reason, message)


class MetricError(MangatlError):
    """Evaluation failure.

    Reasons: ``empty_reference``, ``degenerate``, ``backend``, ``protocol``,
    ``alignment``.
    """
