"""Events over a static model, chronologies (control) and methods.

An event is a closed region of the static description.  A chronology is
the control graph saying which event orderings are permitted; a method is
a named, ordered sequence of events.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import ast
from .diagnostics import DiagnosticBag, DiagnosticError, Diagnostics, FMError, Location
from .model import Model, StageRef, resolve_ref

MAX_ENUMERATION = 10 ** 6
MAX_LENGTH = 12


class LimitExceeded(FMError):
    pass


@dataclass(frozen=True)
class Event:
    id: str
    name: str
    stages: frozenset[StageRef]
    flows: frozenset[str] = frozenset()
    triggers: frozenset[str] = frozenset()
    time: str | None = None
    duration: float | int | None = None
    loc: Location | None = field(default=None, compare=False, repr=False)

    def ordered_stages(self, model: Model) -> list[StageRef]:
        return sorted(self.stages, key=model.stage_key)


@dataclass(frozen=True)
class Chronology:
    id: str
    name: str
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...] = ()
    repeats: Mapping[str, int] = field(default_factory=dict)
    alternatives: tuple[frozenset[str], ...] = ()
    loc: Location | None = field(default=None, compare=False, repr=False)

    def bound(self, node: str) -> int:
        return self.repeats.get(node, 1)

    @property
    def sources(self) -> tuple[str, ...]:
        targets = {b for a, b in self.edges if a != b}
        return tuple(n for n in self.nodes if n not in targets)


@dataclass(frozen=True)
class MethodSpec:
    id: str
    name: str
    events: tuple[str, ...]
    loc: Location | None = field(default=None, compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.events)


# -- events ------------------------------------------------------------------

def _match_triggers(model: Model, src: StageRef, dst: StageRef, action: ast.Action | None) -> list[str]:
    return [t.id for t in model.triggers.values()
            if t.src == src and t.dst == dst and (action is None or t.action == action)]


def bind_event(model: Model, decl: ast.EventDecl, scope: tuple[str, ...] = ()) -> Event:
    """Resolve an event declaration against ``model``.

    Raises :class:`DiagnosticError` for unknown references, an empty
    include list, or a flow/trigger whose endpoints are not in the region.
    """
    bag = DiagnosticBag()
    if not decl.includes:
        bag.error("EmptyRegion", f"event {decl.name} includes nothing", decl.loc, [decl.name])
        raise DiagnosticError(bag.freeze())

    def resolve(ref: ast.Ref) -> StageRef | None:
        sref = resolve_ref(model, scope, ref)
        if sref is None:
            bag.error("DanglingRef", f"event {decl.name}: unknown stage {ref}", ref.loc or decl.loc, [str(ref)])
        return sref

    stages: set[StageRef] = set()
    flows: set[str] = set()
    triggers: set[str] = set()
    for inc in decl.includes:
        src = resolve(inc.src)
        if inc.kind == "stage":
            if src:
                stages.add(src)
            continue
        dst = resolve(inc.dst)
        if not (src and dst):
            continue
        if inc.kind == "flow":
            found = [f.id for f in model.flows.values() if f.src == src and f.dst == dst]
            what = f"flow {src} -> {dst}"
        else:
            found = _match_triggers(model, src, dst, inc.action)
            what = f"trigger {src} => {dst}"
        if not found:
            bag.error("DanglingRef", f"event {decl.name}: no {what} in the model", inc.loc or decl.loc, [what])
        (flows if inc.kind == "flow" else triggers).update(found)

    for fid in sorted(flows, key=model.index):
        f = model.flows[fid]
        missing = [str(r) for r in (f.src, f.dst) if r not in stages]
        if missing:
            bag.error("RegionNotClosed", f"event {decl.name}: flow {f.src} -> {f.dst} included without "
                      + ", ".join(missing), decl.loc, [fid] + missing)
    for tid in sorted(triggers, key=model.index):
        t = model.triggers[tid]
        missing = [str(r) for r in (t.src, t.dst) if r not in stages]
        if missing:
            bag.error("RegionNotClosed", f"event {decl.name}: trigger {t.src} => {t.dst} included without "
                      + ", ".join(missing), decl.loc, [tid] + missing)
    if bag.has_errors:
        raise DiagnosticError(bag.freeze())
    return Event(decl.name, decl.name, frozenset(stages), frozenset(flows), frozenset(triggers),
                 decl.time, decl.duration, decl.loc)


def region_warnings(model: Model, event: Event) -> Diagnostics:
    """Warn when an event's region is not weakly connected."""
    bag = DiagnosticBag()
    parent = {s: s for s in event.stages}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = [model.flows[f] for f in event.flows] + [model.triggers[t] for t in event.triggers]
    for e in edges:
        parent[find(e.src)] = find(e.dst)
    roots = {find(s) for s in event.stages}
    if len(roots) > 1:
        bag.warning("DisconnectedRegion", f"event {event.name} covers {len(roots)} disconnected parts",
                    event.loc, [event.id])
    return bag.freeze()


# -- chronologies --------------------------------------------------------------

def build_chronology(decl: ast.ChronologyDecl) -> Chronology:
    nodes: list[str] = []
    edges: list[tuple[str, str]] = []
    repeats: dict[str, int] = {}
    groups: dict[str, list[str]] = {}

    def note(n):
        if n not in nodes:
            nodes.append(n)

    for arc in decl.arcs:
        note(arc.left)
        if arc.kind == "->":
            note(arc.right)
            if (arc.left, arc.right) not in edges:
                edges.append((arc.left, arc.right))
        elif arc.kind == "|":
            note(arc.right)
            group = groups.setdefault(arc.left, [arc.left])
            if arc.right not in group:
                group.append(arc.right)
        else:
            repeats[arc.left] = arc.count
    alternatives: list[frozenset[str]] = []
    for g in groups.values():
        fg = frozenset(g)
        if fg not in alternatives:
            alternatives.append(fg)
    return Chronology(decl.name, decl.name, tuple(nodes), tuple(edges), repeats, tuple(alternatives), decl.loc)


def validate_chronology(model: Model | None, events: Mapping[str, Event], chron: Chronology,
                        decl: ast.ChronologyDecl | None = None) -> Diagnostics:
    """Unknown events, repeat bounds below one, overlapping alternative groups."""
    bag = DiagnosticBag()
    for n in chron.nodes:
        if n not in events:
            bag.error("DanglingRef", f"chronology {chron.name}: unknown event {n}", chron.loc, [n])
    seen_repeat: dict[str, int] = {}
    arcs = decl.arcs if decl is not None else [ast.Arc("repeat", n, None, c) for n, c in chron.repeats.items()]
    for arc in arcs:
        if arc.kind != "repeat":
            continue
        if arc.count < 1:
            bag.error("InvalidRepeat", f"chronology {chron.name}: repeat bound of {arc.left} must be at least 1",
                      arc.loc or chron.loc, [arc.left])
        if arc.left in seen_repeat and seen_repeat[arc.left] != arc.count:
            bag.error("ConflictingRepeat", f"chronology {chron.name}: {arc.left} has two repeat bounds",
                      arc.loc or chron.loc, [arc.left])
        seen_repeat[arc.left] = arc.count
    owner: dict[str, int] = {}
    for i, group in enumerate(chron.alternatives):
        for n in sorted(group, key=chron.nodes.index):
            if n in owner and owner[n] != i:
                bag.error("OverlappingAlternatives",
                          f"chronology {chron.name}: {n} belongs to two alternative groups", chron.loc, [n])
            owner.setdefault(n, i)
    return bag.freeze()


def admissible(chron: Chronology, seq: Sequence[str]) -> bool:
    """Whether ``seq`` is generated by the chronology's control graph."""
    if not seq:
        return False
    if any(e not in chron.nodes for e in seq):
        return False
    if seq[0] not in chron.sources:
        return False
    edges = set(chron.edges)
    for a, b in zip(seq, seq[1:]):
        if (a, b) in edges:
            continue
        if a == b and chron.bound(a) >= 2:
            continue
        return False
    for n in set(seq):
        if seq.count(n) > chron.bound(n):
            return False
    present = set(seq)
    return all(len(present & group) <= 1 for group in chron.alternatives)


def enumerate_sequences(chron: Chronology, max_len: int) -> list[tuple[str, ...]]:
    """All admissible sequences of length 1..max_len.

    Ordered lexicographically by node declaration index, shorter prefixes
    first.  Raises :class:`LimitExceeded` past one million sequences.
    """
    if not 1 <= max_len <= MAX_LENGTH:
        raise ValueError(f"max_len must be between 1 and {MAX_LENGTH}")
    index = {n: i for i, n in enumerate(chron.nodes)}
    succ: dict[str, list[str]] = {n: [] for n in chron.nodes}
    for a, b in chron.edges:
        succ[a].append(b)
    for n in chron.nodes:
        if chron.bound(n) >= 2 and n not in succ[n]:
            succ[n].append(n)
        succ[n].sort(key=index.__getitem__)
    group_of: dict[str, list[frozenset[str]]] = {}
    for g in chron.alternatives:
        for n in g:
            group_of.setdefault(n, []).append(g)

    out: list[tuple[str, ...]] = []
    path: list[str] = []
    counts: dict[str, int] = {}

    def blocked(n: str) -> bool:
        if counts.get(n, 0) >= chron.bound(n):
            return True
        return any(counts.get(m, 0) for g in group_of.get(n, ()) for m in g if m != n)

    def extend():
        out.append(tuple(path))
        if len(out) > MAX_ENUMERATION:
            raise LimitExceeded(f"chronology {chron.name} has more than {MAX_ENUMERATION} sequences")
        if len(path) == max_len:
            return
        for n in succ[path[-1]]:
            if blocked(n):
                continue
            path.append(n)
            counts[n] = counts.get(n, 0) + 1
            extend()
            counts[n] -= 1
            path.pop()

    for s in sorted(chron.sources, key=index.__getitem__):
        if chron.bound(s) < 1:
            continue
        path.append(s)
        counts[s] = 1
        extend()
        counts[s] = 0
        path.pop()
    return out


# -- methods -------------------------------------------------------------------

def bind_method(decl: ast.MethodDecl, events: Mapping[str, Event]) -> MethodSpec:
    bag = DiagnosticBag()
    if not decl.events:
        bag.error("EmptySequence", f"method {decl.name} has no events", decl.loc, [decl.name])
    for e in decl.events:
        if e not in events:
            bag.error("DanglingRef", f"method {decl.name}: unknown event {e}", decl.loc, [e])
    if bag.has_errors:
        raise DiagnosticError(bag.freeze())
    return MethodSpec(decl.name, decl.name, tuple(decl.events), decl.loc)
