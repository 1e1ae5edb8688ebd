import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from fmkit import (SimConfig, StepLimitExceeded, enumerate_sequences, execute_event, initial_state,
                   load_ast, load_files, load_text, run_method, run_sequence, simulate_sequence)
from fmkit.sim import InadmissibleSequence, MissingArgument
from oracles import check_run, scalar_eval
from strategies import valid_programs


@pytest.fixture(scope="module")
def time_prog(corpus):
    return load_files([corpus / "time.fm"])


@pytest.fixture(scope="module")
def car(corpus):
    return load_files([corpus / "car.fm"])


def test_constructor_inserts_zeros(time_prog):
    state, _ = execute_event(initial_state(time_prog.model), time_prog.events["e2"])
    assert {m: state.values[m] for m in ("Time.hour", "Time.minute", "Time.second")} == {
        "Time.hour": 0, "Time.minute": 0, "Time.second": 0}


def test_single_create_region():
    prog = load_text("machine m { create }\nevent e { include m.create }")
    state, records = execute_event(initial_state(prog.model), prog.events["e"])
    assert [r.action for r in records] == ["create"]
    assert len(state.tokens) == 1 and state.moves == []


def run(prog, seq, **args):
    return run_sequence(prog.model, prog.events, seq, SimConfig(args=args))


def test_drive_burns_one_unit(car):
    state, _ = run(car, ["carInit", "refuel"], x=10)
    after, _ = execute_event(state, car.events["drive"])
    assert after.values["car.fuel"] == state.values["car.fuel"] - 1 == 9


def test_set_time_then_print(time_prog):
    state, trace = run_method(initial_state(time_prog.model), time_prog.methods["setTime"], time_prog.events,
                              {"h": 13, "m": 27, "s": 6})
    _, trace = run_method(state, time_prog.methods["printUniversal"], time_prog.events)
    assert trace.emitted() == [13, 27, 6]


def test_print_standard_pads(time_prog):
    _, trace = run(time_prog, ["e2", "e1", "e4"], h=7, m=5, s=0)
    assert trace.emitted() == ["07", "05", "00"]


def test_refuel_from_empty(car):
    state, _ = run(car, ["carInit", "refuel"], x=3)
    assert state.values["car.fuel"] == 3


def test_set_num_batteries(car):
    state, trace = run(car, ["electricCarInit", "setnumBatteries", "getnumBatteries"], n=2)
    assert state.values["electricCar.numBatteries"] == 2
    assert trace.emitted() == [2]


def test_missing_argument(car):
    with pytest.raises(MissingArgument):
        run(car, ["carInit", "refuel"])


def test_trace_event_order_follows_input(time_prog):
    trace = simulate_sequence(time_prog.model, time_prog.events, ["e2", "e1", "e3"], SimConfig(args=dict(h=1, m=2, s=3)))
    assert trace.event_order() == ["e2", "e1", "e3"]
    assert [r.step for r in trace] == sorted({r.step for r in trace})


def test_empty_sequence(time_prog):
    trace = simulate_sequence(time_prog.model, time_prog.events, [])
    assert len(trace) == 0 and trace.to_tsv() == ""


def test_inadmissible_sequence(corpus):
    prog = load_files([corpus / "video_rental.fm"])
    with pytest.raises(InadmissibleSequence):
        run_sequence(prog.model, prog.events, ["V5", "V1"], chronology=prog.chronologies["rental"])


def test_atm_withdrawal_updates_once_and_confirms_once(corpus):
    prog = load_files([corpus / "atm.fm"])
    state, trace = run_method(initial_state(prog.model), prog.methods["withdraw"], prog.events, {"amount": 50})
    updates = [r for r in trace if r.machine == "Bank.account" and r.action == "process"]
    assert len(updates) == 1 and (updates[0].payload_before, updates[0].payload_after) == (0.0, -50.0)
    confirms = [r for r in trace if r.action == "emit" and r.machine == "Client.confirmation"]
    assert len(confirms) == 1
    assert trace.diagnostics.ok


def test_step_limit(time_prog):
    with pytest.raises(StepLimitExceeded):
        simulate_sequence(time_prog.model, time_prog.events, ["e2", "e3"], SimConfig(max_steps=5))
    with pytest.raises(ValueError):
        SimConfig(max_steps=0)


def test_stuck_token_is_reported():
    prog = load_text("machine m { create, process }\nflow m.create -> m.process\n"
                     "event e { include m.create include m.process include flow m.create -> m.process }")
    trace = simulate_sequence(prog.model, prog.events, ["e"])
    assert trace.diagnostics.codes() == ["StuckToken"]


def test_storage_absorbs_leftovers():
    prog = load_text("machine m { create store, process }\nflow m.create -> m.process\n"
                     "event e { include m.create }")
    state, trace = run_sequence(prog.model, prog.events, ["e"])
    assert [r.action for r in trace] == ["create", "store"]
    assert state.census() == {"created": 1, "resident": 0, "stored": 1, "emitted": 0}


def test_tsv_and_json_share_fields(time_prog):
    trace = simulate_sequence(time_prog.model, time_prog.events, ["e2", "e3"])
    lines = trace.to_tsv().splitlines()
    assert len(lines) == len(trace)
    assert all(len(line.split("\t")) == 7 for line in lines)
    records = json.loads(trace.to_json())
    assert list(records[0]) == ["step", "event", "action", "machine", "token", "payload-before", "payload-after"]
    assert [str(r["step"]) for r in records] == [line.split("\t")[0] for line in lines]


def sequences_of(prog, n=4, limit=6):
    seqs = enumerate_sequences(prog.chronologies["c"], n)
    return seqs[:limit]


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(valid_programs())
def test_conservation_and_locality(tree):
    prog = load_ast(tree)
    for seq in sequences_of(prog):
        violations, _ = check_run(prog, seq)
        assert violations == []


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(valid_programs())
def test_determinism(tree):
    prog = load_ast(tree)
    for seq in sequences_of(prog, limit=3):
        a = simulate_sequence(prog.model, prog.events, seq)
        b = simulate_sequence(load_ast(tree).model, load_ast(tree).events, seq)
        assert a.to_tsv() == b.to_tsv() and a.to_json() == b.to_json()
        assert a.event_order() == [e for i, e in enumerate(seq) if i == 0 or seq[i - 1] != e]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 1000), st.lists(st.tuples(st.sampled_from("+-"), st.integers(-50, 50)), max_size=6))
def test_fuel_arithmetic_matches_scalar_evaluation(car, start, ops):
    state, _ = run(car, ["carInit", "refuel"], x=start)
    for op, k in ops:
        if op == "+":
            state, _ = execute_event(state, car.events["refuel"], args={"x": k})
        else:
            for _ in range(k if k > 0 else 0):
                state, _ = execute_event(state, car.events["drive"])
    expected = scalar_eval(start, [(op, k if op == "+" else max(k, 0)) for op, k in ops])
    assert state.values["car.fuel"] == expected
