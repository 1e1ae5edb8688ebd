"""Flowthing Machine modelling toolkit: DSL, validation, events, simulation, class import, DOT output."""

__version__ = "0.1.0"

from .diagnostics import Diagnostic, DiagnosticError, Diagnostics, Location, ParseErrors
from .dsl import parse_model, print_model
from .model import Model, StageKind, StageRef, build_model, legal_flow, stage_reachability, validate
from .events import (Chronology, Event, LimitExceeded, MethodSpec, admissible, bind_event, bind_method,
                     build_chronology, enumerate_sequences, validate_chronology)
from .loader import Program, load_ast, load_files, load_text
from .sim import (SimConfig, SimState, StepLimitExceeded, Trace, TraceRecord, execute_event, initial_state,
                  run_method, run_sequence, simulate_sequence)
from .classmap import ClassDecl, TranslationOutput, import_classes, link_inheritance, parse_class, translate
from .render import RenderOptions, overlay, to_dot

__all__ = [
    "Chronology", "ClassDecl", "Diagnostic", "DiagnosticError", "Diagnostics", "Event", "LimitExceeded",
    "Location", "MethodSpec", "Model", "ParseErrors", "Program", "RenderOptions", "SimConfig", "SimState",
    "StageKind", "StageRef", "StepLimitExceeded", "Trace", "TraceRecord", "TranslationOutput", "admissible",
    "bind_event", "bind_method", "build_chronology", "build_model", "enumerate_sequences", "execute_event",
    "import_classes", "initial_state", "legal_flow", "link_inheritance", "load_ast", "load_files", "load_text",
    "overlay", "parse_class", "parse_model", "print_model", "run_method", "run_sequence", "simulate_sequence",
    "stage_reachability", "to_dot", "translate", "validate", "validate_chronology",
]
