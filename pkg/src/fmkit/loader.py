"""Assemble a whole ``.fm`` program: model, events, chronologies, methods."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import ast
from .diagnostics import DiagnosticBag, DiagnosticError, Diagnostics
from .dsl import parse_model
from .events import (Chronology, Event, MethodSpec, bind_event, bind_method, build_chronology,
                     region_warnings, validate_chronology)
from .model import Model, build_model, validate


@dataclass(frozen=True)
class Program:
    model: Model
    events: dict[str, Event] = field(default_factory=dict)
    chronologies: dict[str, Chronology] = field(default_factory=dict)
    methods: dict[str, MethodSpec] = field(default_factory=dict)
    diagnostics: Diagnostics = Diagnostics()

    @property
    def ok(self) -> bool:
        return self.diagnostics.ok


def load_ast(tree: ast.ModelAst) -> Program:
    """Build, validate and bind everything in ``tree``.

    Raises :class:`DiagnosticError` only when the model itself cannot be
    built; all later problems are collected in ``Program.diagnostics``.
    """
    model = build_model(tree)
    bag = DiagnosticBag()
    bag.extend(validate(model))

    events: dict[str, Event] = {}
    chron_decls: list[ast.ChronologyDecl] = []
    method_decls: list[ast.MethodDecl] = []
    taken: set[str] = set()
    for scope, d in ast.walk(tree.decls):
        if isinstance(d, (ast.EventDecl, ast.ChronologyDecl, ast.MethodDecl)):
            kind = type(d).__name__[:-4].lower()
            key = (kind, d.name)
            if key in taken:
                bag.error("DuplicateName", f"{kind} {d.name} declared twice", d.loc, [d.name])
                continue
            taken.add(key)
        if isinstance(d, ast.EventDecl):
            try:
                ev = bind_event(model, d, scope)
            except DiagnosticError as exc:
                bag.extend(exc.diagnostics)
                continue
            events[ev.id] = ev
            bag.extend(region_warnings(model, ev))
        elif isinstance(d, ast.ChronologyDecl):
            chron_decls.append(d)
        elif isinstance(d, ast.MethodDecl):
            method_decls.append(d)

    chronologies: dict[str, Chronology] = {}
    for d in chron_decls:
        chron = build_chronology(d)
        diags = validate_chronology(model, events, chron, d)
        bag.extend(diags)
        if diags.ok:
            chronologies[chron.id] = chron
    methods: dict[str, MethodSpec] = {}
    for d in method_decls:
        try:
            methods[d.name] = bind_method(d, events)
        except DiagnosticError as exc:
            bag.extend(exc.diagnostics)
    return Program(model, events, chronologies, methods, bag.freeze())


def load_text(text: str, source: str = "") -> Program:
    return load_ast(parse_model(text, source))


def load_files(paths) -> Program:
    """Parse several ``.fm`` files as one program (declarations concatenated)."""
    tree = ast.ModelAst()
    for p in paths:
        p = Path(p)
        tree = tree + parse_model(p.read_text(encoding="utf-8"), p.name)
    return load_ast(tree)
