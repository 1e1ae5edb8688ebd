"""Simplified class declarations and their translation into FM models.

Class mini-language (``.cls``)::

    classes  := { class }
    class    := "class" NAME [ "inherits" NAME ] "{" { member } "}"
    member   := attr | [ NAME ":" ] method
    attr     := ("public"|"private") NAME ":" type [ "=" SCALAR ]
    type     := "int" | "real" | "string" | "object" ":" NAME
    method   := "constructor" "(" [ NAME { "," NAME } ] ")"
              | "set" NAME "(" NAME ")" { "," NAME "(" NAME ")" }
              | "get" NAME [ "." NAME ]
              | "update" NAME ("+"|"-") OPERAND
              | "output" NAME { "," NAME } [ "format" STRING ]

The optional ``NAME ":"`` prefix names a method (``setTime: set hour(h), ...``);
without it a name is derived (``set qty`` -> ``setQty``).

Translation rules, per class ``C``:

* sphere ``C`` with a class machine ``C : object`` and one typed machine per
  scalar attribute, all with create/receive/process/release/transfer;
* object-typed attributes become a nested sphere translated from the
  referenced class (one instance only);
* a subclass sphere holds copies of its ancestors' machines, tagged
  ``inherited``;
* events: ``C_init`` (creation plus initialisers), ``C_<attr>_out`` (move a
  copy of an attribute towards output), ``C_<obj>_in`` (receive a nested
  object), ``C_output`` (send released data out) and one event per
  setter/update/output method;
* methods become ordered event sequences (getters: send then output).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from . import ast
from .diagnostics import (DiagnosticBag, DiagnosticError, Location, ParseErrors, SyntaxProblem)
from .events import Event, MethodSpec
from .loader import Program, load_ast
from .model import Model

SCALAR_TYPES = ("int", "real", "string")
STAGES = ("create", "receive", "process", "release", "transfer")


@dataclass(frozen=True)
class Attribute:
    name: str
    type: str  # int | real | string | object
    ref_class: str | None = None
    visibility: str = "private"
    initializer: int | float | str | None = None
    inherited_from: str | None = None
    loc: Location | None = field(default=None, compare=False, repr=False)

    @property
    def is_object(self) -> bool:
        return self.type == "object"


@dataclass(frozen=True)
class Method:
    name: str
    kind: str  # constructor | setter | getter | update | output
    attrs: tuple[str, ...] = ()
    params: tuple[str, ...] = ()
    op: str | None = None
    operand: ast.Operand | None = None
    fmt: str | None = None
    inherited_from: str | None = None
    loc: Location | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    superclass: str | None = None
    attributes: tuple[Attribute, ...] = ()
    methods: tuple[Method, ...] = ()
    loc: Location | None = field(default=None, compare=False, repr=False)

    def attribute(self, name: str) -> Attribute | None:
        return next((a for a in self.attributes if a.name == name), None)

    @property
    def own_methods(self) -> tuple[Method, ...]:
        return tuple(m for m in self.methods if m.inherited_from is None)


# -- parsing -------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<name>[^\W\d_]\w*)
  | (?P<op>[{}():,.=+\-])
""", re.VERBOSE | re.UNICODE)


class _Fail(Exception):
    pass


class _ClassParser:
    def __init__(self, text: str, source: str):
        self.source = source
        self.problems: list[SyntaxProblem] = []
        self.toks: list[tuple[str, str, int, int]] = []
        line, line_start, pos = 1, 0, 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                self.problems.append(SyntaxProblem(Location(line, pos - line_start + 1, source),
                                                   ("token",), repr(text[pos])))
                pos += 1
                continue
            if m.lastgroup not in ("ws", "comment"):
                self.toks.append((m.lastgroup, m.group(), line, pos - line_start + 1))
            chunk = m.group()
            if "\n" in chunk:
                line += chunk.count("\n")
                line_start = m.start() + chunk.rindex("\n") + 1
            pos = m.end()
        self.toks.append(("eof", "", line, pos - line_start + 1))
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def loc(self) -> Location:
        return Location(self.tok[2], self.tok[3], self.source)

    def at(self, text: str, offset: int = 0) -> bool:
        t = self.toks[min(self.i + offset, len(self.toks) - 1)]
        return t[0] in ("name", "op") and t[1] == text

    def kind_at(self, kind: str, offset: int = 0) -> bool:
        return self.toks[min(self.i + offset, len(self.toks) - 1)][0] == kind

    def fail(self, *expected):
        found = "end of input" if self.tok[0] == "eof" else repr(self.tok[1])
        self.problems.append(SyntaxProblem(self.loc(), expected, found))
        raise _Fail

    def advance(self):
        t = self.tok
        if t[0] != "eof":
            self.i += 1
        return t

    def expect(self, text: str):
        if not self.at(text):
            self.fail(repr(text))
        return self.advance()

    def name(self) -> str:
        if not self.kind_at("name"):
            self.fail("name")
        return self.advance()[1]

    def scalar(self):
        negative = False
        if self.at("-"):
            self.advance()
            negative = True
        if self.kind_at("number"):
            text = self.advance()[1]
            value = int(text) if text.isdigit() else float(text)
            return -value if negative else value
        if not negative and self.kind_at("string"):
            return _unquote(self.advance()[1])
        self.fail("number", "string")

    def parse(self) -> list[ClassDecl]:
        classes = []
        while not self.kind_at("eof"):
            try:
                classes.append(self.klass())
            except _Fail:
                self.advance()
                while not self.kind_at("eof") and not self.at("class"):
                    self.advance()
        return classes

    def klass(self) -> ClassDecl:
        loc = self.loc()
        self.expect("class")
        name = self.name()
        sup = None
        if self.at("inherits"):
            self.advance()
            sup = self.name()
        self.expect("{")
        attrs, methods = [], []
        while not self.at("}"):
            if self.kind_at("eof"):
                self.fail("'}'")
            if (self.at("public") or self.at("private")) and self.kind_at("name", 1) and self.at(":", 2):
                attrs.append(self.attr())
            else:
                methods.append(self.method(name))
        self.advance()
        return ClassDecl(name, sup, tuple(attrs), tuple(methods), loc)

    def attr(self) -> Attribute:
        loc = self.loc()
        visibility = self.advance()[1]
        name = self.name()
        self.expect(":")
        typ = self.name()
        ref = None
        if typ == "object":
            self.expect(":")
            ref = self.name()
        elif typ not in SCALAR_TYPES:
            self.problems.append(SyntaxProblem(loc, ("int", "real", "string", "object"), repr(typ)))
            raise _Fail
        init = None
        if self.at("="):
            if typ == "object":
                self.fail("end of attribute")
            self.advance()
            init = self.scalar()
        return Attribute(name, typ, ref, visibility, init, None, loc)

    def method(self, class_name: str) -> Method:
        loc = self.loc()
        label = None
        if self.kind_at("name") and self.at(":", 1):
            label = self.advance()[1]
            self.advance()
        word = self.name()
        if word == "constructor":
            self.expect("(")
            params = []
            if not self.at(")"):
                params.append(self.name())
                while self.at(","):
                    self.advance()
                    params.append(self.name())
            self.expect(")")
            return Method(label or class_name, "constructor", tuple(params), tuple(params), loc=loc)
        if word == "set":
            attrs, params = [], []
            while True:
                attrs.append(self.name())
                self.expect("(")
                params.append(self.name())
                self.expect(")")
                if not self.at(","):
                    break
                self.advance()
            return Method(label or "set" + _cap(attrs[0]), "setter", tuple(attrs), tuple(params), loc=loc)
        if word == "get":
            path = [self.name()]
            if self.at("."):
                self.advance()
                path.append(self.name())
            return Method(label or "get" + "".join(_cap(p) for p in path), "getter",
                          (".".join(path),), (), loc=loc)
        if word == "update":
            attr = self.name()
            if not (self.at("+") or self.at("-")):
                self.fail("'+'", "'-'")
            op = self.advance()[1] + "="
            if self.kind_at("number"):
                text = self.advance()[1]
                value = int(text) if text.isdigit() else float(text)
                operand = ast.Operand("int" if isinstance(value, int) else "real", value)
                params = ()
            else:
                pname = self.name()
                operand = ast.Operand("arg", pname)
                params = (pname,)
            return Method(label or "update" + _cap(attr), "update", (attr,), params, op, operand, loc=loc)
        if word == "output":
            attrs = [self.name()]
            while self.at(","):
                self.advance()
                attrs.append(self.name())
            fmt = None
            if self.at("format"):
                self.advance()
                if not self.kind_at("string"):
                    self.fail("string")
                fmt = _unquote(self.advance()[1])
            return Method(label or "output" + _cap(attrs[0]), "output", tuple(attrs), (), fmt=fmt, loc=loc)
        self.i -= 1
        self.fail("attribute", "'constructor'", "'set'", "'get'", "'update'", "'output'")


def _cap(s: str) -> str:
    return s[:1].upper() + s[1:]


def _unquote(tok: str) -> str:
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), tok[1:-1])


def _visible_attrs(cls: ClassDecl, by_name: dict[str, ClassDecl]) -> dict[str, Attribute] | None:
    """Attributes visible in ``cls`` through superclasses parsed alongside it, or None if unknowable."""
    seen, out, cur = set(), {}, cls
    while cur is not None:
        if cur.name in seen:
            return None
        seen.add(cur.name)
        for a in cur.attributes:
            out.setdefault(a.name, a)
        if cur.superclass is None:
            return out
        cur = by_name.get(cur.superclass)
    return None


def _member_problems(cls: ClassDecl, visible: dict[str, Attribute], by_name) -> list[SyntaxProblem]:
    problems = []

    def bad(loc, what, found):
        problems.append(SyntaxProblem(loc or cls.loc, (what,), found))

    names = [a.name for a in cls.attributes]
    for n in {n for n in names if names.count(n) > 1}:
        bad(cls.loc, "unique attribute name", repr(n))
    mnames = [m.name for m in cls.methods]
    for n in {n for n in mnames if mnames.count(n) > 1}:
        bad(cls.loc, "unique method name", repr(n))
    for m in cls.methods:
        for ref in m.attrs:
            head, _, tail = ref.partition(".")
            attr = visible.get(head)
            if attr is None:
                bad(m.loc, f"attribute of class {cls.name}", repr(head))
                continue
            if tail:
                target = by_name.get(attr.ref_class) if attr.is_object else None
                if not attr.is_object:
                    bad(m.loc, "object-typed attribute", repr(head))
                elif target is not None:
                    inner = _visible_attrs(target, by_name)
                    if inner is not None and (tail not in inner or inner[tail].is_object):
                        bad(m.loc, f"scalar attribute of class {target.name}", repr(tail))
            elif m.kind in ("setter", "update", "output") and attr.is_object:
                bad(m.loc, "scalar attribute", repr(head))
    return problems


def parse_class(text: str, source: str = "") -> list[ClassDecl]:
    """Parse class declarations. Raises :class:`ParseErrors`."""
    p = _ClassParser(text, source)
    classes = p.parse()
    by_name = {c.name: c for c in classes}
    for c in classes:
        visible = _visible_attrs(c, by_name)
        if visible is not None:
            p.problems.extend(_member_problems(c, visible, by_name))
    if p.problems:
        raise ParseErrors(sorted(p.problems, key=lambda e: (e.location.line, e.location.column)))
    return classes


# -- inheritance -----------------------------------------------------------------

def link_inheritance(classes: list[ClassDecl]) -> list[ClassDecl]:
    """Give every subclass its superclasses' attributes and methods.

    Inherited members are marked with ``inherited_from``.  Raises
    :class:`DiagnosticError` (UnknownSuperclass, InheritanceCycle,
    InheritedNameCollision, UnknownAttribute).
    """
    bag = DiagnosticBag()
    by_name: dict[str, ClassDecl] = {}
    for c in classes:
        if c.name in by_name:
            bag.error("DuplicateName", f"class {c.name} declared twice", c.loc, [c.name])
        by_name.setdefault(c.name, c)

    resolved: dict[str, ClassDecl] = {}

    def resolve(c: ClassDecl, stack: tuple[str, ...]) -> ClassDecl | None:
        if c.name in resolved:
            return resolved[c.name]
        if c.name in stack:
            cycle = stack[stack.index(c.name):] + (c.name,)
            bag.error("InheritanceCycle", "inheritance cycle: " + " -> ".join(cycle), c.loc, list(cycle))
            return None
        if c.superclass is None:
            resolved[c.name] = c
            return c
        sup = by_name.get(c.superclass)
        if sup is None:
            bag.error("UnknownSuperclass", f"class {c.name} inherits unknown class {c.superclass}",
                      c.loc, [c.name])
            return None
        base = resolve(sup, stack + (c.name,))
        if base is None:
            return None
        own_attr = {a.name for a in c.attributes}
        own_meth = {m.name for m in c.methods}
        clash = sorted(own_attr & {a.name for a in base.attributes}) + \
            sorted(own_meth & {m.name for m in base.methods})
        for n in clash:
            bag.error("InheritedNameCollision", f"class {c.name} redeclares inherited member {n}",
                      c.loc, [f"{c.name}.{n}"])
        attrs = tuple(a if a.inherited_from else replace(a, inherited_from=base.name)
                      for a in base.attributes) + c.attributes
        meths = tuple(m if m.inherited_from else replace(m, inherited_from=base.name)
                      for m in base.methods) + c.methods
        out = replace(c, attributes=attrs, methods=meths)
        resolved[c.name] = out
        return out

    for c in classes:
        if by_name.get(c.name) is c:
            resolve(c, ())
    for c in resolved.values():
        visible = {a.name: a for a in c.attributes}
        for m in c.methods:
            for ref in m.attrs:
                if ref.partition(".")[0] not in visible:
                    bag.error("UnknownAttribute", f"method {c.name}.{m.name} uses unknown attribute {ref}",
                              m.loc, [f"{c.name}.{m.name}"])
        for p in next((m.params for m in c.methods if m.kind == "constructor"), ()):
            if p not in visible:
                bag.error("UnknownAttribute", f"constructor of {c.name} names unknown attribute {p}",
                          c.loc, [c.name])
    if bag.has_errors:
        raise DiagnosticError(bag.freeze())
    return [resolved[c.name] for c in classes if c.name in resolved and by_name[c.name] is c]


# -- translation -----------------------------------------------------------------

@dataclass(frozen=True)
class TranslationOutput:
    model: Model
    events: dict[str, Event]
    methods: dict[str, MethodSpec]
    name_map: dict[str, str]
    model_ast: ast.ModelAst
    events_ast: ast.ModelAst
    program: Program

    @property
    def full_ast(self) -> ast.ModelAst:
        return self.model_ast + self.events_ast


def _ref(path, stage: str) -> ast.Ref:
    return ast.Ref(tuple(path), stage)


def _ancestors(cls: ClassDecl, by_name: dict[str, ClassDecl]) -> list[str]:
    out, cur = [], cls.superclass
    while cur is not None:
        out.append(cur)
        cur = by_name[cur].superclass if cur in by_name else None
    return list(reversed(out))


class _Translator:
    def __init__(self, classes: list[ClassDecl]):
        self.by_name = {c.name: c for c in classes}
        self.bag = DiagnosticBag()
        self.events: list[ast.EventDecl] = []
        self.methods: list[ast.MethodDecl] = []
        self.name_map: dict[str, str] = {}
        self.event_names: set[str] = set()

    def event(self, name: str, includes: list[ast.Include], loc=None) -> str:
        if name in self.event_names:
            self.bag.error("DuplicateName", f"generated event name {name} collides", loc, [name])
        self.event_names.add(name)
        self.events.append(ast.EventDecl(name, tuple(includes)))
        return name

    def sub_name(self, owner: ClassDecl, attr: Attribute, target: ClassDecl) -> str:
        """Sphere name for a composed object: its class, or the attribute when that name is taken."""
        taken = set(_ancestors(owner, self.by_name)) | {owner.name}
        taken |= {a.name for a in owner.attributes if not a.is_object}
        return attr.name if target.name in taken else target.name

    def sphere(self, cls: ClassDecl, scope: tuple[str, ...], root: bool, stack: tuple[str, ...] = (),
               alias: str | None = None):
        path = scope + (alias or cls.name,)
        prefix = "_".join(path)
        key = ".".join(path)
        self.name_map[key] = key
        body: list = []
        machines_of: dict[str, tuple[str, ...]] = {}  # class name -> full machine path

        lineage = _ancestors(cls, self.by_name) + [cls.name]
        for owner in lineage:
            tags = ("inherited",) if owner != cls.name else ()
            body.append(ast.MachineDecl(owner, tuple(ast.StageDecl(s) for s in STAGES), "object", tags))
            machines_of[owner] = path + (owner,)
        scalars = [a for a in cls.attributes if not a.is_object]
        objects = [a for a in cls.attributes if a.is_object]
        for a in scalars:
            tags = (("inherited",) if a.inherited_from else ()) + (a.visibility,)
            body.append(ast.MachineDecl(a.name, tuple(ast.StageDecl(s) for s in STAGES), a.type, tags))
            self.name_map[f"{key}.{a.name}"] = f"{key}.{a.name}"

        seen_types: dict[str, str] = {}
        nested: dict[str, tuple[ClassDecl, tuple[str, ...]]] = {}
        for o in objects:
            target = self.by_name.get(o.ref_class)
            if target is None:
                self.bag.error("UnknownClass", f"{cls.name}.{o.name} refers to unknown class {o.ref_class}",
                               o.loc, [f"{cls.name}.{o.name}"])
                continue
            if o.ref_class in seen_types:
                self.bag.error("Multiplicity", f"{cls.name} holds more than one {o.ref_class} "
                               f"({seen_types[o.ref_class]}, {o.name}); only one instance is supported",
                               o.loc, [f"{cls.name}.{o.name}"])
                continue
            if o.ref_class in stack + (cls.name,):
                self.bag.error("RecursiveComposition", f"{cls.name}.{o.name} nests {o.ref_class} inside itself",
                               o.loc, [f"{cls.name}.{o.name}"])
                continue
            seen_types[o.ref_class] = o.name
            sub = self.sub_name(cls, o, target)
            body.append(self.sphere(target, path, root=False, stack=stack + (cls.name,), alias=sub))
            nested[o.name] = (target, path + (sub,))
            self.name_map[f"{key}.{o.name}"] = ".".join(path + (sub,))

        # static flows
        def flow(a_path, a_stage, b_path, b_stage):
            body.append(ast.FlowDecl(_ref(a_path, a_stage), _ref(b_path, b_stage)))

        for owner in lineage:
            m = (owner,)
            flow(m, "create", m, "process")
            flow(m, "receive", m, "process")
            flow(m, "process", m, "release")
            flow(m, "release", m, "transfer")
            flow(m, "transfer", m, "receive")
        for a in scalars:
            m = (a.name,)
            flow(m, "create", m, "process")
            flow(m, "receive", m, "process")
            flow(m, "process", m, "release")
            flow(m, "release", m, "transfer")
        for oname, (target, tpath) in nested.items():
            flow((tpath[-1], target.name), "transfer", (cls.name,), "transfer")

        # triggers
        triggers: list[ast.TriggerDecl] = []

        def trigger(src_m, src_stage, dst_m, dst_stage, action=None):
            t = ast.TriggerDecl(_ref(src_m, src_stage), _ref(dst_m, dst_stage), action)
            if t not in triggers:
                triggers.append(t)
            return t

        def origin(member) -> str:
            return member.inherited_from or cls.name

        # constructing a subclass constructs its ancestors' parts too
        init_triggers = [trigger((cls.name,), "create", (owner,), "create") for owner in lineage[:-1]]
        for a in scalars:
            if a.initializer is not None:
                kind = {int: "int", float: "real", str: "string"}[type(a.initializer)]
                init_triggers.append(trigger((origin(a),), "create", (a.name,), "create",
                                             ast.Action(":=", ast.Operand(kind, a.initializer))))
        send_triggers = {}
        for a in scalars:
            recv = trigger((origin(a),), "process", (a.name,), "receive", ast.Action("?=", ast.Operand("arg", a.name)))
            copy = trigger((origin(a),), "process", (a.name,), "process", ast.Action("copy"))
            send_triggers[a.name] = (recv, copy)
        method_triggers: dict[str, list[ast.TriggerDecl]] = {}
        for m in cls.methods:
            src = (origin(m),)
            if m.kind == "setter":
                method_triggers[m.name] = [
                    trigger(src, "receive", (a,), "receive", ast.Action(":=", ast.Operand("arg", p)))
                    for a, p in zip(m.attrs, m.params)]
            elif m.kind == "update":
                method_triggers[m.name] = [trigger(src, "process", (m.attrs[0],), "process",
                                                   ast.Action(m.op, m.operand))]
            elif m.kind == "output":
                method_triggers[m.name] = [trigger(src, "process", (a,), "process", ast.Action("copy", None, m.fmt))
                                           for a in m.attrs]
        release_triggers = [trigger((cls.name,), "process", sub + (attr,), "release")
                            for sub, attr in self._scalar_machines(cls, ())]
        body.extend(triggers)
        sphere_decl = ast.SphereDecl(path[-1], tuple(body))

        # events use fully-qualified references so they can live in a separate file
        def q(*parts):
            return path + tuple(parts)

        def stage(parts, st):
            return ast.Include("stage", _ref(q(*parts), st))

        def inc_flow(a, sa, b, sb):
            return ast.Include("flow", _ref(q(*a), sa), _ref(q(*b), sb))

        def inc_trigger(t: ast.TriggerDecl):
            return ast.Include("trigger", _ref(q(*t.src.path), t.src.stage), _ref(q(*t.dst.path), t.dst.stage),
                               t.action)

        ev: dict[str, str] = {}
        incs = [stage((cls.name,), "create")]
        for t in init_triggers:
            incs += [stage(t.dst.path, "create"), inc_trigger(t)]
        ev["init"] = self.event(f"{prefix}_init", incs, cls.loc)
        self.name_map[f"{key}@init"] = ev["init"]

        for a in scalars:
            recv, copy = send_triggers[a.name]
            o = (origin(a),)
            incs = [stage(o, "process"), stage((a.name,), "receive"),
                    stage((a.name,), "process"), stage((a.name,), "release"),
                    inc_trigger(recv), inc_trigger(copy),
                    inc_flow((a.name,), "process", (a.name,), "release")]
            ev[f"out:{a.name}"] = self.event(f"{prefix}_{a.name}_out", incs, a.loc)
            self.name_map[f"{key}.{a.name}@out"] = ev[f"out:{a.name}"]

        for oname, (target, tpath) in nested.items():
            tm = (tpath[-1], target.name)
            incs = [stage(tm, "release"), stage(tm, "transfer"), stage((cls.name,), "transfer"),
                    stage((cls.name,), "receive"),
                    inc_flow(tm, "release", tm, "transfer"),
                    inc_flow(tm, "transfer", (cls.name,), "transfer"),
                    inc_flow((cls.name,), "transfer", (cls.name,), "receive")]
            ev[f"in:{oname}"] = self.event(f"{prefix}_{oname}_in", incs)
            self.name_map[f"{key}.{oname}@in"] = ev[f"in:{oname}"]

        incs = [stage((cls.name,), "process")]
        for t in release_triggers:
            m = t.dst.path
            incs += [stage(m, "release"), stage(m, "transfer"), inc_trigger(t), inc_flow(m, "release", m, "transfer")]
        ev["output"] = self.event(f"{prefix}_output", incs, cls.loc)
        self.name_map[f"{key}@output"] = ev["output"]

        for m in cls.methods:
            o = (origin(m),)
            if m.kind == "setter":
                incs = [stage(o, "receive")]
                for t in method_triggers[m.name]:
                    incs += [stage(t.dst.path, "receive"), inc_trigger(t)]
            elif m.kind == "update":
                t = method_triggers[m.name][0]
                incs = [stage(o, "process"), stage(t.dst.path, "process"), inc_trigger(t)]
            elif m.kind == "output":
                incs = [stage(o, "process")]
                for t in method_triggers[m.name]:
                    a = t.dst.path
                    incs += [stage(a, "process"), stage(a, "release"), stage(a, "transfer"), inc_trigger(t),
                             inc_flow(a, "process", a, "release"), inc_flow(a, "release", a, "transfer")]
            else:
                continue
            ev[f"method:{m.name}"] = self.event(f"{prefix}_{m.name}", incs, m.loc)
            self.name_map[f"{key}.{m.name}@event"] = ev[f"method:{m.name}"]

        if root:
            for m in cls.own_methods:
                seq = self._sequence(cls, m, ev, nested, prefix)
                if seq is None:
                    continue
                mid = f"{cls.name}_{m.name}"
                self.methods.append(ast.MethodDecl(mid, tuple(seq)))
                self.name_map[f"{key}.{m.name}()"] = mid
        return sphere_decl

    def _scalar_machines(self, cls: ClassDecl, sub: tuple[str, ...]):
        for a in cls.attributes:
            if not a.is_object:
                yield sub, a.name
        seen = set()
        for a in cls.attributes:
            target = self.by_name.get(a.ref_class) if a.is_object else None
            if target is None or a.ref_class in seen or target.name == cls.name:
                continue
            seen.add(a.ref_class)
            yield from self._scalar_machines(target, sub + (self.sub_name(cls, a, target),))

    def _sequence(self, cls, m: Method, ev, nested, prefix) -> list[str] | None:
        if m.kind == "constructor":
            seq = []
            if any(a.initializer is not None for a in cls.attributes) or not m.params:
                seq.append(ev["init"])
            for p in m.params:
                attr = cls.attribute(p)
                seq.append(ev[f"in:{p}"] if attr.is_object else ev[f"out:{p}"])
            if m.params:
                seq.append(ev["output"])
            return seq
        if m.kind == "getter":
            head, _, tail = m.attrs[0].partition(".")
            attr = cls.attribute(head)
            if not attr.is_object:
                return [ev[f"out:{head}"], ev["output"]]
            if head not in nested:
                return None
            if not tail:
                return [ev[f"in:{head}"]]
            target, tpath = nested[head]
            return [f"{'_'.join(tpath)}_{tail}_out"]
        return [ev[f"method:{m.name}"]]


def translate(classes: list[ClassDecl]) -> TranslationOutput:
    """Translate linked class declarations into a validated FM program."""
    tr = _Translator(classes)
    spheres = [tr.sphere(c, (), root=True) for c in classes]
    if tr.bag.has_errors:
        raise DiagnosticError(tr.bag.freeze())
    model_ast = ast.ModelAst(tuple(spheres))
    events_ast = ast.ModelAst(tuple(tr.events) + tuple(tr.methods))
    program = load_ast(model_ast + events_ast)
    if not program.diagnostics.ok:
        raise DiagnosticError(program.diagnostics)
    return TranslationOutput(program.model, program.events, program.methods, tr.name_map,
                             model_ast, events_ast, program)


def import_classes(text: str, source: str = "") -> TranslationOutput:
    return translate(link_inheritance(parse_class(text, source)))
