"""Deterministic interpreter: runs events over a model, moving tokens.

Execution of one event:

* entry stages of the region (no inbound region flow or trigger) are
  activated in declaration order; activating a Create stage spawns a token;
* an activated stage fires its region triggers (each trigger at most once
  per event) and pushes resident tokens along its first applicable
  outgoing region flow; every arrival activates the next stage (FIFO);
* a token at a Transfer stage with no outgoing region flow is emitted to
  the environment;
* when the queue drains, tokens left at a non-terminal stage are moved to
  that stage's storage, or reported as stuck.

Typed machines (``machine hour : int``) hold one *value token* which never
moves; triggers assign, update, or copy it.
"""

from __future__ import annotations

import copy
import json
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from .diagnostics import DiagnosticBag, Diagnostic, Diagnostics, FMError, ERROR
from .events import Chronology, Event, MethodSpec, admissible
from .model import Model, StageKind, StageRef, Trigger

ENVIRONMENT = "environment"
DEFAULT_STEP_LIMIT = 10_000

_ACTION_NAME = {
    StageKind.CREATE: "create",
    StageKind.RECEIVE: "receive",
    StageKind.ARRIVE: "receive",
    StageKind.ACCEPT: "receive",
    StageKind.PROCESS: "process",
    StageKind.RELEASE: "release",
    StageKind.TRANSFER: "transfer",
}

_TYPE_DEFAULTS = {"int": 0, "real": 0.0, "string": ""}


class SimulationError(FMError):
    code = "SimulationError"


class StepLimitExceeded(SimulationError):
    code = "StepLimitExceeded"


class MissingArgument(SimulationError):
    code = "MissingArgument"


class InadmissibleSequence(SimulationError):
    code = "InadmissibleSequence"


class UnknownEvent(SimulationError):
    code = "DanglingRef"


class TypeMismatch(SimulationError):
    code = "TypeMismatch"


def step_limit_from_env(default: int = DEFAULT_STEP_LIMIT) -> int:
    raw = os.environ.get("FM_STEP_LIMIT")
    if not raw:
        return default
    value = int(raw)
    if value < 1:
        raise ValueError("FM_STEP_LIMIT must be at least 1")
    return value


@dataclass(frozen=True)
class SimConfig:
    max_steps: int = DEFAULT_STEP_LIMIT
    args: Mapping[str, Any] = field(default_factory=dict)
    # called after every trace record with (state, record); test hook
    observer: Callable[["SimState", "TraceRecord"], None] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass(frozen=True)
class TraceRecord:
    step: int
    event: str
    action: str
    machine: str
    token: str
    payload_before: Any = None
    payload_after: Any = None

    def as_dict(self) -> dict:
        return {"step": self.step, "event": self.event, "action": self.action, "machine": self.machine,
                "token": self.token, "payload-before": self.payload_before,
                "payload-after": self.payload_after}


@dataclass(frozen=True)
class Trace:
    records: tuple[TraceRecord, ...] = ()
    diagnostics: Diagnostics = Diagnostics()

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def event_order(self) -> list[str]:
        """Event ids in order of first appearance, collapsing consecutive runs."""
        out: list[str] = []
        for r in self.records:
            if not out or out[-1] != r.event:
                out.append(r.event)
        return out

    def emitted(self) -> list[Any]:
        return [r.payload_after for r in self.records if r.action == "emit"]

    def to_tsv(self) -> str:
        return "".join("\t".join(_cell(v) for v in (r.step, r.event, r.action, r.machine, r.token,
                                                     r.payload_before, r.payload_after)) + "\n"
                       for r in self.records)

    def to_json(self) -> str:
        return json.dumps([r.as_dict() for r in self.records], indent=2)


def _cell(v) -> str:
    if v is None:
        return ""
    return str(v).replace("\t", " ").replace("\n", " ")


@dataclass
class Token:
    id: str
    payload: Any
    location: StageRef | str


@dataclass
class SimState:
    model: Model
    tokens: dict[str, Token] = field(default_factory=dict)
    holders: dict[str, str] = field(default_factory=dict)  # typed machine id -> value token id
    step: int = 0
    created: int = 0
    moves: list[tuple[str, str, StageRef, StageRef]] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def copy(self) -> "SimState":
        return SimState(self.model, copy.deepcopy(self.tokens), dict(self.holders), self.step,
                        self.created, list(self.moves), list(self.diagnostics))

    @property
    def values(self) -> dict[str, Any]:
        return {m: self.tokens[t].payload for m, t in self.holders.items()}

    def value_of(self, machine: str, default=None):
        tid = self.holders.get(machine)
        return self.tokens[tid].payload if tid else default

    def tokens_at(self, ref: StageRef) -> list[Token]:
        return [t for t in self.tokens.values() if t.location == ref]

    def census(self) -> dict[str, int]:
        resident = sum(1 for t in self.tokens.values() if isinstance(t.location, StageRef))
        emitted = sum(1 for t in self.tokens.values() if t.location == ENVIRONMENT)
        stored = len(self.tokens) - resident - emitted
        return {"created": self.created, "resident": resident, "stored": stored, "emitted": emitted}


def initial_state(model: Model) -> SimState:
    return SimState(model)


@dataclass
class _Activation:
    stage: StageRef
    trigger: Trigger | None = None
    entry: bool = False


class _EventRun:
    def __init__(self, state: SimState, event: Event, config: SimConfig, args: Mapping[str, Any]):
        self.state = state
        self.model = state.model
        self.event = event
        self.config = config
        self.args = args
        self.records: list[TraceRecord] = []
        model = self.model
        self.flows = sorted((model.flows[f] for f in event.flows), key=lambda f: model.index(f.id))
        self.triggers = sorted((model.triggers[t] for t in event.triggers), key=lambda t: model.index(t.id))
        self.out_flows: dict[StageRef, list] = {}
        for f in self.flows:
            self.out_flows.setdefault(f.src, []).append(f)
        self.trig_from: dict[StageRef, list[Trigger]] = {}
        for t in self.triggers:
            self.trig_from.setdefault(t.src, []).append(t)
        self.fired: set[str] = set()
        self.used: set[tuple[str, str]] = set()
        self.queue: deque[_Activation] = deque()
        self.pending: set[StageRef] = set()

    # -- bookkeeping -----------------------------------------------------
    def record(self, action: str, machine: str, token: str = "", before=None, after=None) -> None:
        st = self.state
        if st.step >= self.config.max_steps:
            raise StepLimitExceeded(f"step limit {self.config.max_steps} reached in event {self.event.id}")
        st.step += 1
        rec = TraceRecord(st.step, self.event.id, action, machine, token, before, after)
        self.records.append(rec)
        if self.config.observer is not None:
            self.config.observer(st, rec)

    def spawn(self, ref: StageRef, payload, action: str | None = None, quiet: bool = False) -> Token:
        st = self.state
        st.created += 1
        tok = Token(f"t{st.created}", payload, ref)
        st.tokens[tok.id] = tok
        if not quiet:
            self.record(action or "create", ref.machine, tok.id, None, payload)
        return tok

    def value_token(self, machine: str) -> Token | None:
        tid = self.state.holders.get(machine)
        return self.state.tokens[tid] if tid else None

    def enqueue_arrival(self, ref: StageRef) -> None:
        if ref not in self.pending:
            self.pending.add(ref)
            self.queue.append(_Activation(ref))

    # -- operands ----------------------------------------------------------
    def operand(self, op):
        if op.kind == "arg":
            if op.value not in self.args:
                raise MissingArgument(f"event {self.event.id} needs argument {op.value!r}")
            return self.args[op.value]
        return op.value

    # -- main loop -----------------------------------------------------------
    def run(self) -> list[TraceRecord]:
        region = self.event.stages
        inbound = {f.dst for f in self.flows} | {t.dst for t in self.triggers}
        entries = sorted(region - inbound, key=self.model.stage_key)
        if not entries and region:
            # a region that is one closed loop starts at its first declared stage
            entries = [min(region, key=self.model.stage_key)]
        for ref in entries:
            self.queue.append(_Activation(ref, entry=True))
            self.pending.add(ref)
        while self.queue:
            act = self.queue.popleft()
            if act.trigger is None:
                self.pending.discard(act.stage)
            self.activate(act)
            for t in self.trig_from.get(act.stage, ()):
                if t.id in self.fired:
                    continue
                self.fired.add(t.id)
                self.record("trigger-fire", t.dst.machine)
                self.queue.append(_Activation(t.dst, t))
            self.propagate(act.stage)
        self.settle()
        return self.records

    def activate(self, act: _Activation) -> None:
        ref = act.stage
        machine = self.model.machines[ref.machine]
        action = act.trigger.action if act.trigger else None
        if action is None:
            if ref.kind is StageKind.CREATE:
                held = self.value_token(machine.id) if machine.holds_value else None
                if held is not None:
                    self.record("create", machine.id, held.id, held.payload, held.payload)
                else:
                    tok = self.spawn(ref, None)
                    if machine.holds_value:
                        self.state.holders[machine.id] = tok.id
            elif act.entry or act.trigger is not None:
                self.record(_ACTION_NAME[ref.kind], machine.id)
            return
        if action.op in (":=", "?="):
            if action.op == "?=" and action.operand.value not in self.args:
                self.record(_ACTION_NAME[ref.kind], machine.id)
                return
            self.assign(ref, machine, self.operand(action.operand))
        elif action.op in ("+=", "-="):
            self.update(ref, machine, action.op, self.operand(action.operand))
        elif action.op == "copy":
            self.copy_out(ref, machine, action.fmt)

    def assign(self, ref: StageRef, machine, value) -> None:
        name = _ACTION_NAME[ref.kind]
        if machine.holds_value:
            held = self.value_token(machine.id)
            if held is not None:
                before, held.payload = held.payload, value
                self.record(name, machine.id, held.id, before, value)
            else:
                tok = self.spawn(ref, value, name)
                self.state.holders[machine.id] = tok.id
            return
        if ref.kind is StageKind.CREATE:
            self.spawn(ref, value)
            return
        resident = self.movable(ref)
        if not resident:
            self.record(name, machine.id)
        for tok in resident:
            before, tok.payload = tok.payload, value
            self.record(name, machine.id, tok.id, before, value)

    def _arith(self, op: str, current, operand):
        try:
            return current + operand if op == "+=" else current - operand
        except TypeError as exc:
            raise TypeMismatch(f"cannot apply {op} {operand!r} to {current!r}") from exc

    def update(self, ref: StageRef, machine, op: str, operand) -> None:
        name = _ACTION_NAME[ref.kind]
        if machine.holds_value:
            held = self.value_token(machine.id)
            if held is None:
                # updating an unset value starts from the type's zero, in one record
                held = self.spawn(ref, _TYPE_DEFAULTS.get(machine.type_tag, 0), quiet=True)
                self.state.holders[machine.id] = held.id
            before = held.payload if held.payload is not None else _TYPE_DEFAULTS.get(machine.type_tag, 0)
            held.payload = self._arith(op, before, operand)
            self.record(name, machine.id, held.id, before, held.payload)
            return
        resident = self.movable(ref)
        if not resident:
            self.record(name, machine.id)
        for tok in resident:
            before = tok.payload
            tok.payload = self._arith(op, before, operand)
            self.record(name, machine.id, tok.id, before, tok.payload)

    def copy_out(self, ref: StageRef, machine, fmt: str | None) -> None:
        if machine.holds_value:
            held = self.value_token(machine.id)
            sources = [held.payload if held else None]
        else:
            sources = [t.payload for t in self.movable(ref)]
        for value in sources:
            out = value
            if fmt is not None and value is not None:
                try:
                    out = fmt.format(value)
                except (ValueError, TypeError, IndexError, KeyError) as exc:
                    raise TypeMismatch(f"format {fmt!r} does not accept {value!r}") from exc
            self.state.created += 1
            tok = Token(f"t{self.state.created}", out, ref)
            self.state.tokens[tok.id] = tok
            self.record(_ACTION_NAME[ref.kind], machine.id, tok.id, value, out)

    def movable(self, ref: StageRef) -> list[Token]:
        held = set(self.state.holders.values())
        return [t for t in self.state.tokens.values() if t.location == ref and t.id not in held]

    def applicable(self, flow) -> bool:
        if flow.src.kind is StageKind.ACCEPT and flow.src.machine == flow.dst.machine:
            rejecting = self.model.machines[flow.src.machine].rejecting
            return (flow.dst.kind is StageKind.RELEASE) == rejecting
        return True

    def propagate(self, ref: StageRef) -> None:
        outs = self.out_flows.get(ref, [])
        for tok in self.movable(ref):
            for f in outs:
                if (tok.id, f.id) in self.used or not self.applicable(f):
                    continue
                self.used.add((tok.id, f.id))
                tok.location = f.dst
                self.state.moves.append((tok.id, f.id, f.src, f.dst))
                self.record(_ACTION_NAME[f.dst.kind], f.dst.machine, tok.id, tok.payload, tok.payload)
                self.enqueue_arrival(f.dst)
                break
            else:
                if ref.kind is StageKind.TRANSFER and not outs:
                    tok.location = ENVIRONMENT
                    self.record("emit", ref.machine, tok.id, tok.payload, tok.payload)

    def settle(self) -> None:
        for ref in self.event.ordered_stages(self.model):
            if ref.kind in (StageKind.RELEASE, StageKind.TRANSFER):
                continue
            machine = self.model.machines[ref.machine]
            for tok in self.movable(ref):
                if machine.holds_value and ref.machine not in self.state.holders:
                    self.state.holders[ref.machine] = tok.id
                    continue
                stores = self.model.storages_at(ref)
                if stores:
                    tok.location = stores[0].id
                    self.record("store", ref.machine, tok.id, tok.payload, tok.payload)
                else:
                    self.state.diagnostics.append(Diagnostic(
                        ERROR, "StuckToken",
                        f"event {self.event.id}: token {tok.id} stuck at {ref}", None, (tok.id, str(ref))))


def execute_event(state: SimState, event: Event, config: SimConfig | None = None,
                  args: Mapping[str, Any] | None = None) -> tuple[SimState, list[TraceRecord]]:
    """Run one event; returns the new state and the trace slice it produced."""
    config = config or SimConfig()
    new = state.copy()
    bound = dict(config.args)
    bound.update(args or {})
    records = _EventRun(new, event, config, bound).run()
    return new, records


def run_method(state: SimState, method: MethodSpec, events: Mapping[str, Event],
               args: Mapping[str, Any] | None = None,
               config: SimConfig | None = None) -> tuple[SimState, Trace]:
    """Execute a method's events in declared order."""
    records: list[TraceRecord] = []
    before = len(state.diagnostics)
    for eid in method.events:
        if eid not in events:
            raise UnknownEvent(f"method {method.name}: unknown event {eid}")
        state, part = execute_event(state, events[eid], config, args)
        records.extend(part)
    return state, Trace(tuple(records), Diagnostics(tuple(state.diagnostics[before:])))


def run_sequence(model: Model, events: Mapping[str, Event], seq: Sequence[str],
                 config: SimConfig | None = None, chronology: Chronology | None = None,
                 state: SimState | None = None) -> tuple[SimState, Trace]:
    seq = list(seq)
    if chronology is not None and not admissible(chronology, seq):
        raise InadmissibleSequence(f"sequence {', '.join(seq) or '(empty)'} is not permitted by "
                                   f"chronology {chronology.name}")
    for eid in seq:
        if eid not in events:
            raise UnknownEvent(f"unknown event {eid}")
    state = state or initial_state(model)
    before = len(state.diagnostics)
    records: list[TraceRecord] = []
    for eid in seq:
        state, part = execute_event(state, events[eid], config)
        records.extend(part)
    return state, Trace(tuple(records), Diagnostics(tuple(state.diagnostics[before:])))


def simulate_sequence(model: Model, events: Mapping[str, Event], seq: Sequence[str],
                      config: SimConfig | None = None, chronology: Chronology | None = None) -> Trace:
    """Fold :func:`execute_event` over ``seq`` from an empty state."""
    return run_sequence(model, events, seq, config, chronology)[1]
