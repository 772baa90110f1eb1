"""Shared error and diagnostic types."""

from __future__ import annotations

from dataclasses import dataclass


class DataFormatError(ValueError):
    """A structured input file could not be loaded.

    ``location`` is a human-readable position hint (line/column for parse
    failures, an id or table path for semantic ones).
    """

    def __init__(self, message: str, location: str | None = None) -> None:
        self.location = location
        super().__init__(f"{message} (at {location})" if location else message)


class CatalogError(DataFormatError):
    """Safety-property catalog file is invalid."""


class DatabaseError(DataFormatError):
    """API document database file is invalid."""


class CveError(DataFormatError):
    """CVE dataset file is invalid."""


class SignatureError(ValueError):
    """A function signature string could not be parsed."""


@dataclass(frozen=True)
class Diagnostic:
    """One validation or lint finding.

    ``code`` names the violated rule, ``subject`` the offending id (or ""
    when the finding is global), ``message`` the human-readable detail.
    """

    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        if self.subject:
            return f"{self.code} [{self.subject}]: {self.message}"
        return f"{self.code}: {self.message}"
