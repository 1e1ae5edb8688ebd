"""Hypothesis strategies shared by the test modules."""

from __future__ import annotations

import itertools

from hypothesis import strategies as st

from fmkit import ast
from fmkit.ast import STAGE_ORDER
from fmkit.model import INTRA_FLOWS, StageKind

RESERVED = {"sphere", "machine", "flow", "trigger", "storage", "event", "chronology", "method", "include",
            "time", "duration", "repeat", "copy", "format", "store", "reject"} | set(STAGE_ORDER)

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
names = st.builds(lambda head, tail: head + tail, st.sampled_from(_LETTERS),
                  st.text(_LETTERS + "0123456789_", max_size=6)).filter(lambda s: s not in RESERVED)

scalars = st.one_of(
    st.builds(lambda v: ast.Operand("int", v), st.integers(-10 ** 6, 10 ** 6)),
    st.builds(lambda v: ast.Operand("real", v), st.floats(allow_nan=False, allow_infinity=False, width=64)),
    st.builds(lambda v: ast.Operand("string", v), st.text(st.characters(blacklist_categories=("Cs",)), max_size=8)),
    st.builds(lambda v: ast.Operand("arg", v), names),
)

actions = st.one_of(
    st.none(),
    st.builds(ast.Action, st.sampled_from([":=", "+=", "-="]), scalars),
    st.builds(lambda n: ast.Action("?=", ast.Operand("arg", n)), names),
    st.builds(lambda f: ast.Action("copy", None, f), st.one_of(st.none(), st.text(max_size=6))),
)

refs = st.builds(lambda p, s: ast.Ref(tuple(p), s), st.lists(names, min_size=1, max_size=3),
                 st.sampled_from(STAGE_ORDER))


@st.composite
def stage_decls(draw):
    kinds = draw(st.lists(st.sampled_from(STAGE_ORDER), min_size=1, max_size=7, unique=True))
    out = []
    for k in kinds:
        out.append(ast.StageDecl(k, draw(st.booleans()), k == "accept" and draw(st.booleans())))
    return tuple(out)


machines = st.builds(ast.MachineDecl, names, stage_decls(),
                     st.one_of(st.none(), st.sampled_from(["int", "real", "string", "object"])),
                     st.lists(names, max_size=2).map(tuple))

includes = st.one_of(
    st.builds(lambda r: ast.Include("stage", r), refs),
    st.builds(lambda a, b: ast.Include("flow", a, b), refs, refs),
    st.builds(lambda a, b, c: ast.Include("trigger", a, b, c), refs, refs, actions),
)

events = st.builds(ast.EventDecl, names, st.lists(includes, max_size=5).map(tuple),
                   st.one_of(st.none(), st.text(max_size=6)),
                   st.one_of(st.none(), st.integers(0, 100), st.floats(0, 100)))

arcs = st.one_of(
    st.builds(lambda a, b: ast.Arc("->", a, b), names, names),
    st.builds(lambda a, b: ast.Arc("|", a, b), names, names),
    st.builds(lambda a, n: ast.Arc("repeat", a, None, n), names, st.integers(0, 9)),
)

leaf_decls = st.one_of(
    machines,
    st.builds(ast.FlowDecl, refs, refs),
    st.builds(ast.TriggerDecl, refs, refs, actions),
    st.builds(ast.StorageDecl, refs),
    events,
    st.builds(ast.ChronologyDecl, names, st.lists(arcs, max_size=4).map(tuple)),
    st.builds(ast.MethodDecl, names, st.lists(names, max_size=4).map(tuple)),
)

decls = st.recursive(
    leaf_decls,
    lambda inner: st.builds(ast.SphereDecl, names, st.lists(inner, max_size=4).map(tuple)),
    max_leaves=10,
)

model_asts = st.builds(ast.ModelAst, st.lists(decls, max_size=6).map(tuple))


# -- valid, simulatable programs -------------------------------------------------

_KINDS = list(StageKind)


@st.composite
def valid_programs(draw, max_machines: int = 5):
    """A random model that validates, with closed events and a chronology over them.

    Returns the AST; every event region is closed and only literal
    operands are used, so any event sequence can run without arguments.
    """
    n = draw(st.integers(1, max_machines))
    mdecls, stage_sets = [], []
    for i in range(n):
        kinds = set(draw(st.lists(st.sampled_from(_KINDS), min_size=1, max_size=7, unique=True)))
        if StageKind.RECEIVE in kinds and StageKind.ARRIVE in kinds:
            kinds.discard(draw(st.sampled_from([StageKind.RECEIVE, StageKind.ARRIVE])))
        typed = draw(st.sampled_from([None, None, "int", "real"]))
        stages = tuple(ast.StageDecl(k.value, draw(st.booleans()),
                                     k is StageKind.ACCEPT and draw(st.booleans()))
                       for k in sorted(kinds, key=lambda k: k.rank))
        mdecls.append(ast.MachineDecl(f"m{i}", stages, typed))
        stage_sets.append(kinds)

    def sref(i, k):
        return ast.Ref((f"m{i}",), k.value)

    candidates = []
    for i, kinds in enumerate(stage_sets):
        candidates += [(i, a, i, b) for a, b in sorted(INTRA_FLOWS, key=lambda p: (p[0].rank, p[1].rank))
                       if a in kinds and b in kinds]
    transfers = [i for i, kinds in enumerate(stage_sets) if StageKind.TRANSFER in kinds]
    candidates += [(i, StageKind.TRANSFER, j, StageKind.TRANSFER)
                   for i, j in itertools.permutations(transfers, 2)]
    flows = draw(st.lists(st.sampled_from(candidates), unique=True, max_size=12)) if candidates else []

    all_stages = [(i, k) for i, kinds in enumerate(stage_sets) for k in sorted(kinds, key=lambda k: k.rank)]
    lit = st.builds(lambda v: ast.Operand("int", v), st.integers(-5, 5))
    trig_action = st.one_of(st.none(), st.builds(ast.Action, st.sampled_from([":=", "+=", "-="]), lit),
                            st.builds(lambda: ast.Action("copy")))
    triggers = []
    for _ in range(draw(st.integers(0, 4))):
        (i, a), (j, b) = draw(st.sampled_from(all_stages)), draw(st.sampled_from(all_stages))
        action = draw(trig_action)
        if action is not None and action.op in ("+=", "-=") and mdecls[j].type_tag is None:
            action = ast.Action(":=", action.operand)
        t = ast.TriggerDecl(sref(i, a), sref(j, b), action)
        if t not in triggers:
            triggers.append(t)

    body = list(mdecls)
    body += [ast.FlowDecl(sref(i, a), sref(j, b)) for i, a, j, b in flows]
    body += triggers
    storages = draw(st.lists(st.sampled_from(all_stages), unique=True, max_size=2))
    body += [ast.StorageDecl(sref(i, k)) for i, k in storages]

    evs = []
    for e in range(draw(st.integers(1, 4))):
        chosen = draw(st.lists(st.sampled_from(all_stages), min_size=1, unique=True, max_size=len(all_stages)))
        region = set(chosen)
        incs = [ast.Include("stage", sref(i, k)) for i, k in chosen]
        for i, a, j, b in flows:
            if (i, a) in region and (j, b) in region and draw(st.booleans()):
                incs.append(ast.Include("flow", sref(i, a), sref(j, b)))
        for t in triggers:
            src = (int(t.src.path[0][1:]), StageKind(t.src.stage))
            dst = (int(t.dst.path[0][1:]), StageKind(t.dst.stage))
            if src in region and dst in region and draw(st.booleans()):
                incs.append(ast.Include("trigger", t.src, t.dst, t.action))
        evs.append(ast.EventDecl(f"e{e}", tuple(incs)))

    ev_names = [e.name for e in evs]
    # nothing enters e0, so the chronology always has a source
    arcs = [ast.Arc("->", a, b) for a, b in
            draw(st.lists(st.tuples(st.sampled_from(ev_names), st.sampled_from(ev_names)), max_size=5, unique=True))
            if b != "e0"]
    for name in draw(st.lists(st.sampled_from(ev_names), unique=True, max_size=2)):
        arcs.append(ast.Arc("repeat", name, None, draw(st.integers(1, 3))))
    # make sure every event appears as a node
    arcs += [ast.Arc("repeat", n, None, 1) for n in ev_names if not any(n in (a.left, a.right) for a in arcs)]
    chron = ast.ChronologyDecl("c", tuple(arcs))
    return ast.ModelAst((ast.SphereDecl("S", tuple(body) + tuple(evs)), chron))
