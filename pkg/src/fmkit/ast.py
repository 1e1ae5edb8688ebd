"""Syntax tree for the FM model language.

Every node carries its source location; locations are excluded from
equality so that a reparsed tree compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .diagnostics import Location

STAGE_ORDER = ("create", "receive", "arrive", "accept", "process", "release", "transfer")


def _loc():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Operand:
    kind: str  # "int" | "real" | "string" | "arg"
    value: Union[int, float, str]


@dataclass(frozen=True)
class Action:
    op: str  # ":=" | "?=" | "+=" | "-=" | "copy"
    operand: Operand | None = None
    fmt: str | None = None


@dataclass(frozen=True)
class Ref:
    path: tuple[str, ...]
    stage: str
    loc: Location | None = _loc()

    def __str__(self) -> str:
        return ".".join(self.path + (self.stage,))


@dataclass(frozen=True)
class StageDecl:
    kind: str
    store: bool = False
    reject: bool = False


@dataclass(frozen=True, eq=False)
class MachineDecl:
    name: str
    stages: tuple[StageDecl, ...]
    type_tag: str | None = None
    tags: tuple[str, ...] = ()
    loc: Location | None = _loc()

    # stage lists compare as sets; the printer reorders them
    def _key(self):
        return (self.name, self.type_tag, self.tags, frozenset(self.stages), len(self.stages))

    def __eq__(self, other):
        if not isinstance(other, MachineDecl):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


@dataclass(frozen=True)
class SphereDecl:
    name: str
    body: tuple["Decl", ...] = ()
    loc: Location | None = _loc()


@dataclass(frozen=True)
class FlowDecl:
    src: Ref
    dst: Ref
    loc: Location | None = _loc()


@dataclass(frozen=True)
class TriggerDecl:
    src: Ref
    dst: Ref
    action: Action | None = None
    loc: Location | None = _loc()


@dataclass(frozen=True)
class StorageDecl:
    ref: Ref
    loc: Location | None = _loc()


@dataclass(frozen=True)
class Include:
    kind: str  # "stage" | "flow" | "trigger"
    src: Ref
    dst: Ref | None = None
    action: Action | None = None
    loc: Location | None = _loc()


@dataclass(frozen=True)
class EventDecl:
    name: str
    includes: tuple[Include, ...] = ()
    time: str | None = None
    duration: Union[int, float, None] = None
    loc: Location | None = _loc()


@dataclass(frozen=True)
class Arc:
    kind: str  # "->" | "repeat" | "|"
    left: str
    right: str | None = None
    count: int | None = None
    loc: Location | None = _loc()


@dataclass(frozen=True)
class ChronologyDecl:
    name: str
    arcs: tuple[Arc, ...] = ()
    loc: Location | None = _loc()


@dataclass(frozen=True)
class MethodDecl:
    name: str
    events: tuple[str, ...] = ()
    loc: Location | None = _loc()


Decl = Union[SphereDecl, MachineDecl, FlowDecl, TriggerDecl, StorageDecl,
             EventDecl, ChronologyDecl, MethodDecl]


@dataclass(frozen=True)
class ModelAst:
    decls: tuple[Decl, ...] = ()

    def __add__(self, other: "ModelAst") -> "ModelAst":
        return ModelAst(self.decls + other.decls)


def walk(decls, scope: tuple[str, ...] = ()):
    """Yield ``(scope, decl)`` for every declaration, depth first, in source order."""
    for d in decls:
        yield scope, d
        if isinstance(d, SphereDecl):
            yield from walk(d.body, scope + (d.name,))
