"""Exception types shared across the package.

Plain ``ValueError`` is used for bad argument values; the classes here cover
failures that callers may want to handle specially (file format problems,
metrics that cannot run on the given set sizes, and so on).
"""

from __future__ import annotations


class TextdivError(Exception):
    """Base class for all package-specific errors."""


class CorpusFormatError(TextdivError):
    """A corpus or embedding file failed validation.

    Carries the 1-based line number when the problem is tied to a line.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingEmbeddingError(TextdivError):
    """An embedding lookup failed for a text that is not in the table."""

    def __init__(self, key: str, text: str):
        snippet = text if len(text) <= 60 else text[:57] + "..."
        super().__init__(f"no embedding for key {key} (text: {snippet!r})")
        self.key = key
        self.text = text


class InsufficientSamplesError(TextdivError):
    """A statistic was requested on sets too small to support it."""


class ExactLimitExceededError(TextdivError):
    """Exact enumeration was requested but the partition count is too large."""

    def __init__(self, count: int, limit: int):
        super().__init__(
            f"exact mode needs {count} partition evaluations which exceeds the "
            f"limit of {limit}; rerun with --mode montecarlo (and --samples), "
            f"or raise --exact-limit if you really want full enumeration"
        )
        self.count = count
        self.limit = limit
