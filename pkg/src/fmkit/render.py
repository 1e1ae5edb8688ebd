"""DOT emission for models and event overlays.

Spheres and machines become nested ``cluster_*`` subgraphs, stages become
nodes, flows solid edges, triggers dashed edges and storage a cylinder node
attached by a dotted, arrowless edge.  Overlaid events become extra rounded,
dashed clusters; events with the same stage region share one cluster.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .diagnostics import DiagnosticBag, DiagnosticError
from .dsl import format_action
from .events import Event
from .model import Model, StageRef


@dataclass(frozen=True)
class RenderOptions:
    overlay: tuple[str, ...] = ()
    show_storage: bool = True
    rankdir: str = "LR"


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _node_id(ref: StageRef) -> str:
    return _q(f"{ref.machine}.{ref.kind.value}")


def _groups(model: Model, events: list[Event]) -> list[tuple[list[str], list[StageRef]]]:
    groups: dict[frozenset, list[str]] = {}
    for ev in events:
        groups.setdefault(ev.stages, []).append(ev.id)
    return [(ids, sorted(region, key=model.stage_key)) for region, ids in groups.items()]


def _render(model: Model, groups, options: RenderOptions) -> str:
    membership: dict[StageRef, list[str]] = {}
    for ids, region in groups:
        for ref in region:
            membership.setdefault(ref, []).append(", ".join(ids))

    out = ["digraph FM {", f"  rankdir={_q(options.rankdir)};", "  compound=true;",
           '  node [shape=box, style=rounded, fontsize=10];']

    def machine(mid: str, indent: str):
        m = model.machines[mid]
        label = m.name + (f" : {m.type_tag}" if m.type_tag else "")
        if m.tags:
            label += f" [{', '.join(m.tags)}]"
        out.append(f"{indent}subgraph {_q('cluster_m_' + mid)} {{")
        out.append(f"{indent}  label={_q(label)};")
        for kind in m.ordered_stages():
            ref = StageRef(mid, kind)
            text = kind.value
            if len(membership.get(ref, ())) > 1:
                text += "\n{" + "; ".join(membership[ref]) + "}"
            out.append(f"{indent}  {_node_id(ref)} [label={_q(text)}];")
        out.append(f"{indent}}}")

    def sphere(sid: str, indent: str):
        s = model.spheres[sid]
        out.append(f"{indent}subgraph {_q('cluster_s_' + sid)} {{")
        out.append(f"{indent}  label={_q(s.name)};")
        out.append(f"{indent}  style=bold;")
        for child in sorted(s.machines + s.children, key=model.index):
            if child in model.machines:
                machine(child, indent + "  ")
            else:
                sphere(child, indent + "  ")
        out.append(f"{indent}}}")

    for top in sorted([s.id for s in model.root_spheres()] + [m.id for m in model.root_machines()],
                      key=model.index):
        (machine if top in model.machines else sphere)(top, "  ")

    if options.show_storage:
        for st in model.storages.values():
            out.append(f"  {_q(st.id)} [shape=cylinder, style=solid, label=\"storage\"];")
            out.append(f"  {_node_id(st.stage)} -> {_q(st.id)} [style=dotted, arrowhead=none];")
    for f in model.flows.values():
        out.append(f"  {_node_id(f.src)} -> {_node_id(f.dst)};")
    for t in model.triggers.values():
        attrs = "style=dashed"
        if t.action is not None:
            attrs += f", label={_q(format_action(t.action))}"
        out.append(f"  {_node_id(t.src)} -> {_node_id(t.dst)} [{attrs}];")

    for ids, region in groups:
        name = "_".join(ids)
        out.append(f"  subgraph {_q('cluster_e_' + name)} {{")
        out.append(f"    label={_q(', '.join(ids))};")
        out.append("    style=\"rounded,dashed\";")
        out.append("    color=blue;")
        for ref in region:
            out.append(f"    {_node_id(ref)};")
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"


def to_dot(model: Model, options: RenderOptions | None = None, events: Mapping[str, Event] | None = None) -> str:
    """DOT text for ``model``; ``options.overlay`` ids are looked up in ``events``."""
    options = options or RenderOptions()
    if options.overlay:
        return overlay(model, options.overlay, options, events or {})
    return _render(model, [], options)


def overlay(model: Model, event_ids: Iterable[str], options: RenderOptions | None = None,
            events: Mapping[str, Event] | None = None) -> str:
    """DOT text with one styled cluster per distinct event region.

    ``event_ids`` may also be :class:`Event` objects.  Raises
    :class:`DiagnosticError` (DanglingRef) for ids missing from ``events``.
    """
    options = options or RenderOptions()
    events = events or {}
    chosen: list[Event] = []
    bag = DiagnosticBag()
    for e in event_ids:
        if isinstance(e, Event):
            ev = e
        elif e in events:
            ev = events[e]
        else:
            bag.error("DanglingRef", f"overlay names unknown event {e}", None, [str(e)])
            continue
        if ev not in chosen:
            chosen.append(ev)
    if bag.has_errors:
        raise DiagnosticError(bag.freeze())
    return _render(model, _groups(model, chosen), options)
