import functools

import pydot
import pytest

from fmkit import DiagnosticError, RenderOptions, build_model, load_files, load_text, overlay, parse_model, to_dot
from fmkit.events import Event


@functools.lru_cache(maxsize=None)
def parse_dot(text):
    (graph,) = pydot.graph_from_dot_data(text)
    return graph


def clusters(graph):
    out = []
    for sub in graph.get_subgraphs():
        out.append(sub.get_name().strip('"'))
        out += clusters(sub)
    return out


def edge_styles(graph):
    return [(e.get("style") or "solid").strip('"') for e in graph.get_edges()]


def counts(text):
    g = parse_dot(text)
    styles = edge_styles(g)
    return clusters(g), styles.count("solid"), styles.count("dashed"), styles.count("dotted")


@pytest.fixture(scope="module")
def time_prog(corpus):
    return load_files([corpus / "time.fm"])


def test_empty_model_renders_an_empty_digraph():
    text = to_dot(build_model(parse_model("")))
    g = parse_dot(text)
    assert text.startswith("digraph FM {")
    assert {n.get_name() for n in g.get_nodes()} <= {"node", "graph", "edge"}
    assert clusters(g) == [] and g.get_edges() == []


def test_time_clusters_and_constructor_edges(time_prog):
    text = to_dot(time_prog.model)
    names, solid, dashed, _ = counts(text)
    assert names == ["cluster_s_Time", "cluster_m_Time.Time", "cluster_m_Time.hour", "cluster_m_Time.minute",
                     "cluster_m_Time.second"]
    assert solid == len(time_prog.model.flows) and dashed == 12
    ctor = [e for e in parse_dot(text).get_edges()
            if e.get_source() == '"Time.Time.create"' and e.get("style") == "dashed"]
    assert len(ctor) == 3


def test_book_author_nested(corpus):
    g = parse_dot(to_dot(load_files([corpus / "book.fm"]).model))
    (book,) = [s for s in g.get_subgraphs() if s.get_name() == '"cluster_s_Book"']
    assert '"cluster_s_Book.Author"' in [s.get_name() for s in book.get_subgraphs()]


def test_storage_is_optional():
    m = build_model(parse_model("machine m { create store, release }\nflow m.create -> m.release"))
    _, solid, _, dotted = counts(to_dot(m))
    assert (solid, dotted) == (1, 1)
    _, solid, _, dotted = counts(to_dot(m, RenderOptions(show_storage=False)))
    assert (solid, dotted) == (1, 0)


def test_rankdir_is_passed_through(time_prog):
    assert 'rankdir="TB"' in to_dot(time_prog.model, RenderOptions(rankdir="TB"))


def test_overlay_of_nothing_equals_plain(time_prog):
    assert overlay(time_prog.model, [], events=time_prog.events) == to_dot(time_prog.model)


def test_print_events_share_one_cluster(time_prog):
    text = overlay(time_prog.model, ["e3", "e4"], events=time_prog.events)
    g = parse_dot(text)
    (cluster,) = [s for s in g.get_subgraphs() if s.get_name().startswith('"cluster_e_')]
    members = {n.get_name().strip('"') for n in cluster.get_nodes()}
    assert members == {f"Time.{a}.{k}" for a in ("hour", "minute", "second")
                       for k in ("process", "release", "transfer")} | {"Time.Time.process"}
    assert cluster.get("style") == '"rounded,dashed"'


def test_disjoint_overlays_get_separate_clusters(time_prog):
    text = overlay(time_prog.model, ["e1", "e2", "e3"], events=time_prog.events)
    names = clusters(parse_dot(text))
    assert sum(n.startswith("cluster_e_") for n in names) == 3
    assert "\\n{" not in text


def test_shared_stage_gets_membership_label():
    text = """machine m { create, release, transfer }
    flow m.create -> m.release
    event a { include m.create }
    event b { include m.create include m.release include flow m.create -> m.release }"""
    prog = load_text(text)
    out = overlay(prog.model, ["a", "b"], events=prog.events)
    assert 'label="create\\n{a; b}"' in out


def test_unknown_overlay_event(time_prog):
    with pytest.raises(DiagnosticError) as info:
        overlay(time_prog.model, ["e99"], events=time_prog.events)
    assert info.value.diagnostics.codes() == ["DanglingRef"]


def test_event_objects_are_accepted(time_prog):
    ev: Event = time_prog.events["e1"]
    assert overlay(time_prog.model, [ev]) == overlay(time_prog.model, ["e1"], events=time_prog.events)


def test_corpus_render_is_deterministic_and_faithful(corpus):
    for path in sorted(corpus.glob("*.fm")):
        prog = load_files([path])
        a, b = to_dot(prog.model), to_dot(load_files([path]).model)
        assert a == b
        names, solid, dashed, dotted = counts(a)
        m = prog.model
        assert len(names) == len(m.spheres) + len(m.machines)
        assert (solid, dashed, dotted) == (len(m.flows), len(m.triggers), len(m.storages))
        if prog.events:
            ids = list(prog.events)
            over = overlay(m, ids, events=prog.events)
            regions = {e.stages for e in prog.events.values()}
            assert len(clusters(parse_dot(over))) == len(names) + len(regions)
