"""Diagnostics shared by the parser and the signature validator."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """Half-open byte range into a source text, with 1-based line/column."""

    start: int
    end: int
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: Span | None = None
    site: str | None = None  # declaration name for post-parse diagnostics

    def __str__(self) -> str:
        where = str(self.span) if self.span is not None else (self.site or "?")
        return f"{self.severity}: {where}: {self.message}"


def error(message: str, span: Span | None = None, site: str | None = None) -> Diagnostic:
    return Diagnostic("error", message, span, site)
