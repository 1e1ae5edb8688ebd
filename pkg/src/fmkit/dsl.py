"""Lexer, recursive-descent parser and canonical printer for ``.fm`` files.

Grammar (whitespace-insensitive, ``#`` starts a line comment)::

    model      := { decl }
    decl       := sphere | machine | flow | trigger | storage
                | event | chronology | method
    sphere     := "sphere" NAME "{" { decl } "}"
    machine    := "machine" NAME [ ":" NAME ] [ "[" NAME { "," NAME } "]" ]
                  "{" stage { "," stage } "}"
    stage      := stagekind [ "store" ] [ "reject" ]          # reject: accept only
    flow       := "flow" ref "->" ref
    trigger    := "trigger" ref "=>" ref [ action ]
    action     := ( ":=" | "+=" | "-=" ) operand | "?=" NAME
                | "copy" [ "format" STRING ]
    storage    := "storage" ref
    ref        := NAME { "." NAME } "." stagekind
    event      := "event" NAME "{" { "include" incl } [ "time" STRING ]
                  [ "duration" NUMBER ] "}"
    incl       := "flow" ref "->" ref | "trigger" ref "=>" ref [ action ] | ref
    chronology := "chronology" NAME "{" { arc } "}"
    arc        := NAME ( "->" NAME | "repeat" NUMBER | "|" NAME )
    method     := "method" NAME "=" "(" [ NAME { "," NAME } ] ")"
    operand    := NUMBER | STRING | NAME
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    STAGE_ORDER, Action, Arc, ChronologyDecl, EventDecl, FlowDecl, Include,
    MachineDecl, MethodDecl, ModelAst, Operand, Ref, SphereDecl, StageDecl,
    StorageDecl, TriggerDecl,
)
from .diagnostics import Location, ParseErrors, SyntaxProblem

DECL_KEYWORDS = ("sphere", "machine", "flow", "trigger", "storage", "event", "chronology", "method")
STAGE_KINDS = frozenset(STAGE_ORDER)

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<name>[^\W\d_]\w*)
  | (?P<op>->|=>|:=|\?=|\+=|-=|[{}()\[\],.:|=])
""", re.VERBOSE | re.UNICODE)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # NAME NUMBER STRING OP EOF
    text: str
    line: int
    column: int

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        return repr(self.text)


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), body)


def tokenize(text: str, source: str = "") -> tuple[list[Token], list[SyntaxProblem]]:
    tokens: list[Token] = []
    problems: list[SyntaxProblem] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            if text[pos] == '"':
                found = "unterminated string"
                end = text.find("\n", pos)
                pos = len(text) if end < 0 else end
            else:
                found = repr(text[pos])
                pos += 1
            problems.append(SyntaxProblem(Location(line, col, source), ("token",), found))
            continue
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "name":
            tokens.append(Token("NAME", m.group(), line, col))
        elif kind == "number":
            tokens.append(Token("NUMBER", m.group(), line, col))
        elif kind == "string":
            tokens.append(Token("STRING", m.group(), line, col))
        elif kind == "op":
            tokens.append(Token("OP", m.group(), line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens, problems


class _Fail(Exception):
    pass


class Parser:
    def __init__(self, text: str, source: str = ""):
        self.source = source
        self.tokens, self.problems = tokenize(text, source)
        self.i = 0
        self.depth = 0

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def loc(self, tok: Token | None = None) -> Location:
        tok = tok or self.tok
        return Location(tok.line, tok.column, self.source)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("OP", "NAME") and self.tok.text == text

    def at_keyword(self) -> bool:
        return self.tok.kind == "NAME" and self.tok.text in DECL_KEYWORDS

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "EOF":
            self.i += 1
        if tok.kind == "OP":
            if tok.text == "{":
                self.depth += 1
            elif tok.text == "}":
                self.depth -= 1
        return tok

    def fail(self, *expected: str):
        self.problems.append(SyntaxProblem(self.loc(), expected, self.tok.describe()))
        raise _Fail

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(repr(text))
        return self.advance()

    def name(self) -> str:
        if self.tok.kind != "NAME":
            self.fail("name")
        return self.advance().text

    def number(self):
        if self.tok.kind != "NUMBER":
            self.fail("number")
        text = self.advance().text
        return int(text) if re.fullmatch(r"-?\d+", text) else float(text)

    def string(self) -> str:
        if self.tok.kind != "STRING":
            self.fail("string")
        return _unescape(self.advance().text[1:-1])

    # -- statements ----------------------------------------------------
    def parse(self) -> ModelAst:
        decls = self.block(top=True)
        if self.problems:
            raise ParseErrors(sorted(self.problems, key=lambda p: (p.location.line, p.location.column)))
        return ModelAst(tuple(decls))

    def block(self, top: bool) -> list:
        decls = []
        while True:
            if self.tok.kind == "EOF":
                if not top:
                    self.fail("'}'")
                return decls
            if not top and self.at("}"):
                return decls
            start_depth, start_i = self.depth, self.i
            try:
                decls.append(self.decl())
            except _Fail:
                if self.i == start_i:
                    # no progress (e.g. a stray '}'): drop the offending token
                    self.advance()
                    self.depth = start_depth
                self.resync(start_depth)

    def resync(self, depth: int) -> None:
        # skip to the next statement at the depth where the failed one began
        while self.tok.kind != "EOF":
            if self.depth == depth and (self.at("}") or self.at_keyword()):
                return
            if self.depth < depth:
                return
            self.advance()

    def decl(self):
        tok = self.tok
        if tok.kind == "NAME" and tok.text in DECL_KEYWORDS:
            return getattr(self, "p_" + tok.text)()
        self.fail(*(repr(k) for k in DECL_KEYWORDS))

    def p_sphere(self):
        loc = self.loc()
        self.advance()
        name = self.name()
        self.expect("{")
        body = self.block(top=False)
        self.expect("}")
        return SphereDecl(name, tuple(body), loc)

    def p_machine(self):
        loc = self.loc()
        self.advance()
        name = self.name()
        type_tag = None
        tags: list[str] = []
        if self.at(":"):
            self.advance()
            type_tag = self.name()
        if self.at("["):
            self.advance()
            tags.append(self.name())
            while self.at(","):
                self.advance()
                tags.append(self.name())
            self.expect("]")
        self.expect("{")
        stages = [self.stage()]
        while self.at(","):
            self.advance()
            stages.append(self.stage())
        self.expect("}")
        return MachineDecl(name, tuple(stages), type_tag, tuple(tags), loc)

    def stage(self) -> StageDecl:
        if not (self.tok.kind == "NAME" and self.tok.text in STAGE_KINDS):
            self.fail("stage kind")
        kind = self.advance().text
        store = reject = False
        if self.at("store"):
            self.advance()
            store = True
        if kind == "accept" and self.at("reject"):
            self.advance()
            reject = True
        return StageDecl(kind, store, reject)

    def ref(self) -> Ref:
        loc = self.loc()
        if self.at_keyword():
            self.fail("machine.stage reference")
        parts = [self.name()]
        while self.at("."):
            self.advance()
            parts.append(self.name())
        if len(parts) < 2 or parts[-1] not in STAGE_KINDS:
            self.problems.append(SyntaxProblem(loc, ("machine.stage reference",), repr(".".join(parts))))
            raise _Fail
        return Ref(tuple(parts[:-1]), parts[-1], loc)

    def action(self) -> Action | None:
        if self.at(":=") or self.at("+=") or self.at("-="):
            op = self.advance().text
            return Action(op, self.operand())
        if self.at("?="):
            self.advance()
            return Action("?=", Operand("arg", self.name()))
        if self.at("copy"):
            self.advance()
            fmt = None
            if self.at("format"):
                self.advance()
                fmt = self.string()
            return Action("copy", None, fmt)
        return None

    def operand(self) -> Operand:
        tok = self.tok
        if tok.kind == "NUMBER":
            value = self.number()
            return Operand("int" if isinstance(value, int) else "real", value)
        if tok.kind == "STRING":
            return Operand("string", self.string())
        if tok.kind == "NAME":
            return Operand("arg", self.advance().text)
        self.fail("number", "string", "name")

    def p_flow(self):
        loc = self.loc()
        self.advance()
        src = self.ref()
        self.expect("->")
        return FlowDecl(src, self.ref(), loc)

    def p_trigger(self):
        loc = self.loc()
        self.advance()
        src = self.ref()
        self.expect("=>")
        dst = self.ref()
        return TriggerDecl(src, dst, self.action(), loc)

    def p_storage(self):
        loc = self.loc()
        self.advance()
        return StorageDecl(self.ref(), loc)

    def p_event(self):
        loc = self.loc()
        self.advance()
        name = self.name()
        self.expect("{")
        includes = []
        while self.at("include"):
            iloc = self.loc()
            self.advance()
            if self.at("flow"):
                self.advance()
                src = self.ref()
                self.expect("->")
                includes.append(Include("flow", src, self.ref(), None, iloc))
            elif self.at("trigger"):
                self.advance()
                src = self.ref()
                self.expect("=>")
                dst = self.ref()
                includes.append(Include("trigger", src, dst, self.action(), iloc))
            else:
                includes.append(Include("stage", self.ref(), None, None, iloc))
        time = duration = None
        if self.at("time"):
            self.advance()
            time = self.string()
        if self.at("duration"):
            self.advance()
            duration = self.number()
        if not self.at("}"):
            self.fail("'include'", "'time'", "'duration'", "'}'")
        self.advance()
        return EventDecl(name, tuple(includes), time, duration, loc)

    def p_chronology(self):
        loc = self.loc()
        self.advance()
        name = self.name()
        self.expect("{")
        arcs = []
        while self.tok.kind == "NAME":
            aloc = self.loc()
            left = self.advance().text
            if self.at("->"):
                self.advance()
                arcs.append(Arc("->", left, self.name(), None, aloc))
            elif self.at("|"):
                self.advance()
                arcs.append(Arc("|", left, self.name(), None, aloc))
            elif self.at("repeat"):
                self.advance()
                count = self.number()
                if not isinstance(count, int):
                    self.fail("integer")
                arcs.append(Arc("repeat", left, None, count, aloc))
            else:
                self.fail("'->'", "'|'", "'repeat'")
        self.expect("}")
        return ChronologyDecl(name, tuple(arcs), loc)

    def p_method(self):
        loc = self.loc()
        self.advance()
        name = self.name()
        self.expect("=")
        self.expect("(")
        events = []
        if not self.at(")"):
            events.append(self.name())
            while self.at(","):
                self.advance()
                events.append(self.name())
        self.expect(")")
        return MethodDecl(name, tuple(events), loc)


def parse_model(text: str, source: str = "") -> ModelAst:
    """Parse FM model text. Raises :class:`ParseErrors` listing every bad statement."""
    return Parser(text, source).parse()


# -- printer -----------------------------------------------------------------

def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


def _num(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def format_operand(op: Operand) -> str:
    if op.kind == "string":
        return _quote(op.value)
    if op.kind == "arg":
        return op.value
    return _num(op.value)


def format_action(action: Action | None) -> str:
    if action is None:
        return ""
    if action.op == "copy":
        return " copy" + (f" format {_quote(action.fmt)}" if action.fmt is not None else "")
    return f" {action.op} {format_operand(action.operand)}"


def _stage(s: StageDecl) -> str:
    return s.kind + (" store" if s.store else "") + (" reject" if s.reject else "")


def _print_decl(d, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(d, SphereDecl):
        out.append(f"{pad}sphere {d.name} {{")
        for child in d.body:
            _print_decl(child, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(d, MachineDecl):
        stages = sorted(d.stages, key=lambda s: STAGE_ORDER.index(s.kind))
        head = d.name
        if d.type_tag:
            head += f" : {d.type_tag}"
        if d.tags:
            head += " [" + ", ".join(d.tags) + "]"
        out.append(f"{pad}machine {head} {{ {', '.join(_stage(s) for s in stages)} }}")
    elif isinstance(d, FlowDecl):
        out.append(f"{pad}flow {d.src} -> {d.dst}")
    elif isinstance(d, TriggerDecl):
        out.append(f"{pad}trigger {d.src} => {d.dst}{format_action(d.action)}")
    elif isinstance(d, StorageDecl):
        out.append(f"{pad}storage {d.ref}")
    elif isinstance(d, EventDecl):
        out.append(f"{pad}event {d.name} {{")
        for inc in d.includes:
            if inc.kind == "flow":
                out.append(f"{pad}  include flow {inc.src} -> {inc.dst}")
            elif inc.kind == "trigger":
                out.append(f"{pad}  include trigger {inc.src} => {inc.dst}{format_action(inc.action)}")
            else:
                out.append(f"{pad}  include {inc.src}")
        if d.time is not None:
            out.append(f"{pad}  time {_quote(d.time)}")
        if d.duration is not None:
            out.append(f"{pad}  duration {_num(d.duration)}")
        out.append(f"{pad}}}")
    elif isinstance(d, ChronologyDecl):
        out.append(f"{pad}chronology {d.name} {{")
        for a in d.arcs:
            if a.kind == "repeat":
                out.append(f"{pad}  {a.left} repeat {a.count}")
            else:
                out.append(f"{pad}  {a.left} {a.kind} {a.right}")
        out.append(f"{pad}}}")
    elif isinstance(d, MethodDecl):
        out.append(f"{pad}method {d.name} = ({', '.join(d.events)})")
    else:
        raise TypeError(f"not a declaration: {d!r}")


def print_model(ast: ModelAst) -> str:
    out: list[str] = []
    for d in ast.decls:
        _print_decl(d, 0, out)
    return "".join(line + "\n" for line in out)
