"""Diagnostic records and the exceptions that carry them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Location:
    line: int
    column: int
    source: str = ""

    def __str__(self) -> str:
        prefix = f"{self.source}:" if self.source else ""
        return f"{prefix}{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    location: Location | None = None
    elements: tuple[str, ...] = ()

    def __str__(self) -> str:
        loc = str(self.location) if self.location else "-"
        return f"{self.severity} {self.code} {loc} {self.message}"


@dataclass(frozen=True)
class Diagnostics:
    """An ordered, immutable batch of diagnostics."""

    items: tuple[Diagnostic, ...] = ()

    def __iter__(self):
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __add__(self, other: Diagnostics) -> Diagnostics:
        return Diagnostics(self.items + tuple(other))

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.items if d.severity == ERROR)

    @property
    def warnings(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.items if d.severity == WARNING)

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> list[str]:
        return [d.code for d in self.items]


class DiagnosticBag:
    """Mutable collector used while a pass runs; frozen with :meth:`freeze`."""

    def __init__(self) -> None:
        self._items: list[Diagnostic] = []

    def error(self, code: str, message: str, location=None, elements: Iterable[str] = ()) -> None:
        self._items.append(Diagnostic(ERROR, code, message, location, tuple(elements)))

    def warning(self, code: str, message: str, location=None, elements: Iterable[str] = ()) -> None:
        self._items.append(Diagnostic(WARNING, code, message, location, tuple(elements)))

    def extend(self, diags: Iterable[Diagnostic]) -> None:
        self._items.extend(diags)

    @property
    def has_errors(self) -> bool:
        return any(d.severity == ERROR for d in self._items)

    def freeze(self) -> Diagnostics:
        return Diagnostics(tuple(self._items))


class FMError(Exception):
    pass


class DiagnosticError(FMError):
    """Raised by passes that cannot produce a result; carries every problem found."""

    def __init__(self, diagnostics: Diagnostics):
        self.diagnostics = diagnostics
        first = diagnostics.errors[0] if diagnostics.errors else None
        super().__init__(str(first) if first else "diagnostics reported")


@dataclass(frozen=True)
class SyntaxProblem:
    location: Location
    expected: tuple[str, ...]
    found: str

    def __str__(self) -> str:
        exp = " or ".join(self.expected) if self.expected else "end of statement"
        return f"{self.location}: expected {exp}, found {self.found}"


class ParseErrors(FMError):
    def __init__(self, errors: list[SyntaxProblem]):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))

    def as_diagnostics(self) -> Diagnostics:
        return Diagnostics(tuple(
            Diagnostic(ERROR, "ParseError", f"expected {' or '.join(e.expected) or 'statement'}, found {e.found}", e.location)
            for e in self.errors
        ))
