"""``fm`` command-line front end.

Exit codes: 0 success, 1 validation/semantic errors, 2 usage or parse
errors, 3 step limit exceeded.  Diagnostics go to stderr, machine output
(DOT, traces, generated DSL) to stdout or the requested file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .classmap import link_inheritance, parse_class, translate
from .diagnostics import DiagnosticError, Diagnostics, ParseErrors
from .dsl import parse_model, print_model
from .events import LimitExceeded, admissible, enumerate_sequences
from .loader import Program, load_ast
from .render import RenderOptions, overlay, to_dot
from .sim import (SimConfig, SimulationError, StepLimitExceeded, Trace, initial_state, run_method,
                  run_sequence, step_limit_from_env)

OK, ERRORS, USAGE, LIMIT = 0, 1, 2, 3


class _Exit(Exception):
    def __init__(self, code: int):
        self.code = code


def _report(diags) -> None:
    for d in diags:
        print(d, file=sys.stderr)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error IOError {path} {exc.strerror or exc}", file=sys.stderr)
        raise _Exit(USAGE)


def _load(paths: list[str], allow_errors: bool = False) -> Program:
    """Parse ``.fm`` and ``.cls`` inputs into one program; exits on failure."""
    fm_tree = None
    classes = []
    for p in paths:
        text = _read(p)
        try:
            if p.endswith(".cls"):
                classes.extend(parse_class(text, Path(p).name))
            else:
                tree = parse_model(text, Path(p).name)
                fm_tree = tree if fm_tree is None else fm_tree + tree
        except ParseErrors as exc:
            _report(exc.as_diagnostics())
            raise _Exit(USAGE)
    try:
        if classes:
            out = translate(link_inheritance(classes))
            fm_tree = out.full_ast if fm_tree is None else out.full_ast + fm_tree
        program = load_ast(fm_tree)
    except DiagnosticError as exc:
        _report(exc.diagnostics)
        raise _Exit(ERRORS)
    _report(program.diagnostics)
    if not program.ok and not allow_errors:
        raise _Exit(ERRORS)
    return program


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _ids(raw: str | None) -> list[str]:
    return [s.strip() for s in (raw or "").split(",") if s.strip()]


def _scalar(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _args(raw: str | None) -> dict:
    out = {}
    for item in _ids(raw):
        key, sep, value = item.partition("=")
        if not sep or not key:
            print(f"error UsageError - malformed argument {item!r}; expected key=value", file=sys.stderr)
            raise _Exit(USAGE)
        out[key.strip()] = _scalar(value.strip())
    return out


def _find_method(program: Program, name: str):
    if name in program.methods:
        return program.methods[name]
    hits = [m for mid, m in program.methods.items() if mid.endswith("_" + name)]
    if len(hits) == 1:
        return hits[0]
    what = "ambiguous" if hits else "unknown"
    print(f"error DanglingRef - {what} method {name}", file=sys.stderr)
    raise _Exit(ERRORS)


# -- subcommands -------------------------------------------------------------

def cmd_validate(ns) -> int:
    _load(ns.paths)
    return OK


def cmd_render(ns) -> int:
    program = _load(ns.paths)
    options = RenderOptions(tuple(_ids(ns.overlay)), not ns.no_storage, ns.rankdir)
    try:
        text = overlay(program.model, options.overlay, options, program.events) if options.overlay \
            else to_dot(program.model, options)
    except DiagnosticError as exc:
        _report(exc.diagnostics)
        return ERRORS
    _write(text, ns.out)
    return OK


def cmd_simulate(ns) -> int:
    if (ns.method is None) == (ns.sequence is None):
        print("error UsageError - give exactly one of --method or --sequence", file=sys.stderr)
        return USAGE
    program = _load(ns.paths)
    try:
        config = SimConfig(max_steps=step_limit_from_env(), args=_args(ns.args))
    except ValueError as exc:
        print(f"error UsageError - {exc}", file=sys.stderr)
        return USAGE
    try:
        if ns.method is not None:
            state, records, diags = initial_state(program.model), [], Diagnostics()
            for name in _ids(ns.method):
                state, trace = run_method(state, _find_method(program, name), program.events, None, config)
                records.extend(trace.records)
                diags = diags + trace.diagnostics
        else:
            chron = None
            if ns.chronology:
                chron = program.chronologies.get(ns.chronology)
                if chron is None:
                    print(f"error DanglingRef - unknown chronology {ns.chronology}", file=sys.stderr)
                    return ERRORS
            _, trace = run_sequence(program.model, program.events, _ids(ns.sequence), config, chron)
            records, diags = list(trace.records), trace.diagnostics
    except StepLimitExceeded as exc:
        print(f"error {exc.code} - {exc}", file=sys.stderr)
        return LIMIT
    except SimulationError as exc:
        print(f"error {exc.code} - {exc}", file=sys.stderr)
        return ERRORS
    trace = Trace(tuple(records), diags)
    _write(trace.to_json() + "\n" if ns.json else trace.to_tsv(), ns.trace)
    _report(diags)
    return OK if diags.ok else ERRORS


def cmd_import(ns) -> int:
    classes = []
    for p in ns.paths:
        try:
            classes.extend(parse_class(_read(p), Path(p).name))
        except ParseErrors as exc:
            _report(exc.as_diagnostics())
            return USAGE
    try:
        out = translate(link_inheritance(classes))
    except DiagnosticError as exc:
        _report(exc.diagnostics)
        return ERRORS
    model_text = print_model(out.model_ast)
    events_text = print_model(out.events_ast)
    if ns.emit_events:
        _write(model_text, ns.emit_model)
        _write(events_text, ns.emit_events)
    else:
        _write(model_text + "\n" + events_text, ns.emit_model)
    return OK


def cmd_events(ns) -> int:
    program = _load(ns.paths)
    chrons = program.chronologies
    if ns.chronology:
        if ns.chronology not in chrons:
            print(f"error DanglingRef - unknown chronology {ns.chronology}", file=sys.stderr)
            return ERRORS
        chrons = {ns.chronology: chrons[ns.chronology]}
    status = OK
    for chron in chrons.values():
        if ns.check is not None:
            seq = _ids(ns.check)
            verdict = admissible(chron, seq)
            print(f"{chron.name}\t{'admissible' if verdict else 'inadmissible'}\t{','.join(seq)}")
            if not verdict:
                status = ERRORS
        elif ns.enumerate:
            try:
                for seq in enumerate_sequences(chron, ns.enumerate):
                    print(f"{chron.name}\t{','.join(seq)}")
            except (ValueError, LimitExceeded) as exc:
                print(f"error LimitExceeded - {exc}", file=sys.stderr)
                return LIMIT if isinstance(exc, LimitExceeded) else USAGE
        else:
            print(f"{chron.name}\tsources={','.join(chron.sources)}\tevents={len(chron.nodes)}")
    return status


# -- wiring -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    version = f"fm {__version__}"
    parser = argparse.ArgumentParser(prog="fm", description="Flowthing Machine modelling toolkit.")
    parser.add_argument("--version", action="version", version=version)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text, paths_help="model files (.fm, or .cls to translate first)"):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--version", action="version", version=version)
        p.add_argument("paths", nargs="+", help=paths_help)
        p.set_defaults(func=func)
        return p

    command("validate", cmd_validate, "Check models and report diagnostics.")

    p = command("render", cmd_render, "Emit DOT for a model.")
    p.add_argument("--overlay", help="comma-separated event ids to outline")
    p.add_argument("--out", help="write DOT here instead of stdout")
    p.add_argument("--no-storage", action="store_true", help="omit storage nodes")
    p.add_argument("--rankdir", default="LR", help="DOT rank direction (default LR)")

    p = command("simulate", cmd_simulate, "Run a method or an event sequence and print its trace.")
    p.add_argument("--method", help="method name (comma-separated to run several in order)")
    p.add_argument("--args", help="method arguments as k=v,k=v")
    p.add_argument("--sequence", help="comma-separated event ids")
    p.add_argument("--chronology", help="check --sequence against this chronology first")
    p.add_argument("--trace", help="write the trace here instead of stdout")
    p.add_argument("--json", action="store_true", help="JSON instead of tab-separated records")

    p = command("import", cmd_import, "Translate class declarations into FM DSL.", "class files (.cls)")
    p.add_argument("--emit-model", help="file for the generated model (default stdout)")
    p.add_argument("--emit-events", help="separate file for generated events and methods")

    p = command("events", cmd_events, "Check chronologies and list admissible sequences.")
    p.add_argument("--chronology", help="only this chronology")
    p.add_argument("--check", help="comma-separated sequence to test for admissibility")
    p.add_argument("--enumerate", type=int, metavar="N", help="list admissible sequences up to length N")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return ns.func(ns)
    except _Exit as exc:
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
