"""The static FM description: spheres, machines, stages, flows, triggers, storage.

A :class:`Model` is built from a parsed :class:`~fmkit.ast.ModelAst` by
:func:`build_model` and checked by :func:`validate`.  Element ids are
fully-qualified dotted paths (``Book.Author.name``) for spheres and
machines and sequential ids (``flow3``, ``trigger1``, ``store2``) for the
rest.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from . import ast
from .diagnostics import DiagnosticBag, DiagnosticError, Diagnostics, Location


class StageKind(enum.Enum):
    CREATE = "create"
    RECEIVE = "receive"
    ARRIVE = "arrive"
    ACCEPT = "accept"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"

    @property
    def rank(self) -> int:
        return _RANK[self]


_RANK = {k: i for i, k in enumerate(StageKind)}

C, R, AR, AC, P, RL, T = (StageKind.CREATE, StageKind.RECEIVE, StageKind.ARRIVE, StageKind.ACCEPT,
                          StageKind.PROCESS, StageKind.RELEASE, StageKind.TRANSFER)

#: Permitted flows inside one machine.  Between machines only Transfer -> Transfer.
INTRA_FLOWS = frozenset({
    (T, R), (T, AR), (AR, AC), (AC, P), (AC, RL), (R, P), (R, RL),
    (C, P), (C, RL), (P, RL), (RL, T),
})


@dataclass(frozen=True, order=True)
class StageRef:
    machine: str
    kind: StageKind

    def __str__(self) -> str:
        return f"{self.machine}.{self.kind.value}"

    @classmethod
    def parse(cls, text: str) -> "StageRef":
        machine, _, kind = text.rpartition(".")
        return cls(machine, StageKind(kind))


def _loc():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Sphere:
    id: str
    name: str
    parent: str | None
    children: tuple[str, ...] = ()
    machines: tuple[str, ...] = ()
    loc: Location | None = _loc()


@dataclass(frozen=True)
class Machine:
    id: str
    name: str
    sphere: str | None
    stages: frozenset[StageKind]
    type_tag: str | None = None
    tags: tuple[str, ...] = ()
    rejecting: bool = False
    loc: Location | None = _loc()

    @property
    def holds_value(self) -> bool:
        """Typed machines keep exactly one current value."""
        return self.type_tag is not None

    def ordered_stages(self) -> list[StageKind]:
        return sorted(self.stages, key=lambda k: k.rank)


@dataclass(frozen=True)
class Flow:
    id: str
    src: StageRef
    dst: StageRef
    loc: Location | None = _loc()


@dataclass(frozen=True)
class Trigger:
    id: str
    src: StageRef
    dst: StageRef
    action: ast.Action | None = None
    loc: Location | None = _loc()


@dataclass(frozen=True)
class Storage:
    id: str
    stage: StageRef
    loc: Location | None = _loc()


@dataclass(frozen=True)
class Model:
    spheres: dict[str, Sphere] = field(default_factory=dict)
    machines: dict[str, Machine] = field(default_factory=dict)
    flows: dict[str, Flow] = field(default_factory=dict)
    triggers: dict[str, Trigger] = field(default_factory=dict)
    storages: dict[str, Storage] = field(default_factory=dict)
    order: tuple[str, ...] = ()

    def index(self, element_id: str) -> int:
        try:
            return self._order_index[element_id]
        except KeyError:
            return len(self.order)

    @property
    def _order_index(self) -> dict[str, int]:
        cached = self.__dict__.get("_idx")
        if cached is None:
            cached = {e: i for i, e in enumerate(self.order)}
            object.__setattr__(self, "_idx", cached)
        return cached

    def has_stage(self, ref: StageRef) -> bool:
        m = self.machines.get(ref.machine)
        return m is not None and ref.kind in m.stages

    def stage_refs(self) -> list[StageRef]:
        """All declared stages in declaration order."""
        return [StageRef(m.id, k) for m in self.machines.values() for k in m.ordered_stages()]

    def stage_key(self, ref: StageRef) -> tuple[int, int]:
        return (self.index(ref.machine), ref.kind.rank)

    def storages_at(self, ref: StageRef) -> list[Storage]:
        return [s for s in self.storages.values() if s.stage == ref]

    def outgoing_flows(self, ref: StageRef) -> list[Flow]:
        return [f for f in self.flows.values() if f.src == ref]

    def root_spheres(self) -> list[Sphere]:
        return [s for s in self.spheres.values() if s.parent is None]

    def root_machines(self) -> list[Machine]:
        return [m for m in self.machines.values() if m.sphere is None]


def legal_flow(src: StageRef, dst: StageRef, model: Model | None = None) -> bool:
    """Whether a flow from ``src`` to ``dst`` follows the machine lifecycle."""
    if src.machine == dst.machine:
        return (src.kind, dst.kind) in INTRA_FLOWS
    return src.kind is T and dst.kind is T


# -- building ----------------------------------------------------------------

class _Builder:
    def __init__(self):
        self.bag = DiagnosticBag()
        self.spheres: dict[str, dict] = {}
        self.machines: dict[str, Machine] = {}
        self.flows: dict[str, Flow] = {}
        self.triggers: dict[str, Trigger] = {}
        self.storages: dict[str, Storage] = {}
        self.order: list[str] = []
        self.scope_names: dict[tuple[str, ...], set[str]] = {(): set()}

    def declare(self, decls, scope: tuple[str, ...]):
        for d in decls:
            if isinstance(d, ast.SphereDecl):
                if not self._claim(scope, d.name, d.loc):
                    continue
                sid = ".".join(scope + (d.name,))
                parent = ".".join(scope) if scope else None
                self.spheres[sid] = {"id": sid, "name": d.name, "parent": parent,
                                     "children": [], "machines": [], "loc": d.loc}
                if parent:
                    self.spheres[parent]["children"].append(sid)
                self.order.append(sid)
                self.scope_names[scope + (d.name,)] = set()
                self.declare(d.body, scope + (d.name,))
            elif isinstance(d, ast.MachineDecl):
                if not self._claim(scope, d.name, d.loc):
                    continue
                mid = ".".join(scope + (d.name,))
                kinds = []
                for st in d.stages:
                    kind = StageKind(st.kind)
                    if kind in kinds:
                        self.bag.error("DuplicateStage", f"machine {mid} declares {kind.value} twice", d.loc, [mid])
                    kinds.append(kind)
                rejecting = any(st.reject for st in d.stages)
                sphere = ".".join(scope) if scope else None
                self.machines[mid] = Machine(mid, d.name, sphere, frozenset(kinds), d.type_tag,
                                             tuple(d.tags), rejecting, d.loc)
                if sphere:
                    self.spheres[sphere]["machines"].append(mid)
                self.order.append(mid)
                for st in d.stages:
                    if st.store:
                        self._add_storage(StageRef(mid, StageKind(st.kind)), d.loc)

    def _claim(self, scope, name, loc) -> bool:
        names = self.scope_names[scope]
        if name in names:
            where = ".".join(scope) or "top level"
            self.bag.error("DuplicateName", f"{name!r} declared twice in {where}", loc, [".".join(scope + (name,))])
            return False
        names.add(name)
        return True

    def _add_storage(self, ref: StageRef, loc):
        sid = f"store{len(self.storages) + 1}"
        self.storages[sid] = Storage(sid, ref, loc)
        self.order.append(sid)

    def resolve_machine(self, scope: tuple[str, ...], path: tuple[str, ...]) -> str | None:
        for k in range(len(scope), -1, -1):
            candidate = ".".join(scope[:k] + path)
            if candidate in self.machines:
                return candidate
        return None

    def resolve(self, scope, ref: ast.Ref, need_stage: bool = True) -> StageRef | None:
        mid = self.resolve_machine(scope, ref.path)
        if mid is None:
            self.bag.error("DanglingRef", f"unknown machine {'.'.join(ref.path)!r}", ref.loc, [str(ref)])
            return None
        sref = StageRef(mid, StageKind(ref.stage))
        if need_stage and sref.kind not in self.machines[mid].stages:
            self.bag.error("DanglingRef", f"machine {mid} has no {ref.stage} stage", ref.loc, [str(sref)])
            return None
        return sref

    def connect(self, decls, scope):
        for d in decls:
            if isinstance(d, ast.SphereDecl):
                if ".".join(scope + (d.name,)) in self.spheres:
                    self.connect(d.body, scope + (d.name,))
            elif isinstance(d, ast.FlowDecl):
                src, dst = self.resolve(scope, d.src), self.resolve(scope, d.dst)
                if src and dst:
                    fid = f"flow{len(self.flows) + 1}"
                    self.flows[fid] = Flow(fid, src, dst, d.loc)
                    self.order.append(fid)
            elif isinstance(d, ast.TriggerDecl):
                src, dst = self.resolve(scope, d.src), self.resolve(scope, d.dst)
                if src and dst:
                    tid = f"trigger{len(self.triggers) + 1}"
                    self.triggers[tid] = Trigger(tid, src, dst, d.action, d.loc)
                    self.order.append(tid)
            elif isinstance(d, ast.StorageDecl):
                ref = self.resolve(scope, d.ref, need_stage=False)
                if ref:
                    self._add_storage(ref, d.loc)

    def result(self) -> Model:
        spheres = {
            sid: Sphere(s["id"], s["name"], s["parent"], tuple(s["children"]), tuple(s["machines"]), s["loc"])
            for sid, s in self.spheres.items()
        }
        return Model(spheres, dict(self.machines), dict(self.flows), dict(self.triggers),
                     dict(self.storages), tuple(self.order))


def build_model(tree: ast.ModelAst) -> Model:
    """Resolve names and assemble a :class:`Model`.

    Event, chronology and method declarations are ignored here; see
    :mod:`fmkit.events`.  Raises :class:`DiagnosticError` on unresolved
    references or duplicate names.
    """
    b = _Builder()
    b.declare(tree.decls, ())
    b.connect(tree.decls, ())
    if b.bag.has_errors:
        raise DiagnosticError(b.bag.freeze())
    return b.result()


def resolve_ref(model: Model, scope: tuple[str, ...], ref: ast.Ref) -> StageRef | None:
    """Resolve a dotted reference innermost scope first; ``None`` if unknown."""
    for k in range(len(scope), -1, -1):
        candidate = ".".join(scope[:k] + ref.path)
        m = model.machines.get(candidate)
        if m is not None:
            kind = StageKind(ref.stage)
            return StageRef(candidate, kind) if kind in m.stages else None
    return None


# -- validation --------------------------------------------------------------

def validate(model: Model) -> Diagnostics:
    """Check a model and return every violation found (never raises)."""
    bag = DiagnosticBag()

    seen_cycles: set[frozenset[str]] = set()
    for sid, sphere in model.spheres.items():
        chain, cur = [], sid
        while cur is not None and cur not in chain:
            chain.append(cur)
            parent = model.spheres.get(cur)
            cur = parent.parent if parent else None
        if cur is not None:
            cycle = frozenset(chain[chain.index(cur):])
            if cycle not in seen_cycles:
                seen_cycles.add(cycle)
                members = sorted(cycle, key=model.index)
                bag.error("SphereCycle", "sphere nesting forms a cycle: " + " -> ".join(members),
                          sphere.loc, members)
        elif sphere.parent is not None and sphere.parent not in model.spheres:
            bag.error("DanglingRef", f"sphere {sid} has unknown parent {sphere.parent}", sphere.loc, [sid])

    for mid, m in model.machines.items():
        if m.sphere is not None and m.sphere not in model.spheres:
            bag.error("DanglingRef", f"machine {mid} is in unknown sphere {m.sphere}", m.loc, [mid])
        if R in m.stages and AR in m.stages:
            bag.error("ReceiveAndArriveTogether",
                      f"machine {mid} declares both receive and arrive", m.loc, [mid])

    for f in model.flows.values():
        if not (model.has_stage(f.src) and model.has_stage(f.dst)):
            bag.error("DanglingRef", f"flow {f.src} -> {f.dst} names an undeclared stage", f.loc, [f.id])
        elif not legal_flow(f.src, f.dst, model):
            bag.error("IllegalFlow", f"flow {f.src} -> {f.dst} is not a legal stage transition",
                      f.loc, [f.id])
    for t in model.triggers.values():
        if not (model.has_stage(t.src) and model.has_stage(t.dst)):
            bag.error("DanglingRef", f"trigger {t.src} => {t.dst} names an undeclared stage", t.loc, [t.id])
    for s in model.storages.values():
        if not model.has_stage(s.stage):
            bag.error("StorageOnMissingStage", f"storage attached to undeclared stage {s.stage}",
                      s.loc, [s.id])

    touched: set[str] = set()
    inbound: set[StageRef] = set()
    for e in list(model.flows.values()) + list(model.triggers.values()):
        touched.update((e.src.machine, e.dst.machine))
        inbound.add(e.dst)
    for mid, m in model.machines.items():
        if mid not in touched:
            bag.warning("OrphanMachine", f"no flow or trigger touches machine {mid}", m.loc, [mid])
            continue
        for kind in m.ordered_stages():
            ref = StageRef(mid, kind)
            if kind not in (C, T) and ref not in inbound:
                bag.warning("UnreachableStage", f"nothing flows or triggers into {ref}", m.loc, [str(ref)])
    return bag.freeze()


def successors(model: Model) -> dict[StageRef, list[StageRef]]:
    adj: dict[StageRef, list[StageRef]] = {}
    for e in list(model.flows.values()) + list(model.triggers.values()):
        adj.setdefault(e.src, []).append(e.dst)
    return adj


def stage_reachability(model: Model, start: StageRef) -> set[StageRef]:
    """Stages reachable from ``start`` over flows and triggers (``start`` included)."""
    adj = successors(model)
    seen = {start}
    queue = deque([start])
    while queue:
        for nxt in adj.get(queue.popleft(), ()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen
