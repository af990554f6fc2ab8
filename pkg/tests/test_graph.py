import random

import pytest

from provprune.graph import (
    build_graph,
    dot_lines,
    export_graph,
    graph_lines,
    remove_nodes,
    summarize,
)
from provprune.ingest import Event, NodeRecord, parse_stream

from oracles import random_graph_records


def small_fixture():
    """Two processes spawning into a file touch, the classic 3-node shape."""
    nodes = [
        NodeRecord(id="p1", kind="process", cmdline="bash"),
        NodeRecord(id="p2", kind="process", cmdline="cp a b"),
        NodeRecord(id="fA", kind="file", path="/tmp/a"),
    ]
    events = [
        Event(subject="p1", object="p2", syscall="clone", ts=10),
        Event(subject="p2", object="fA", syscall="open", ts=20),
    ]
    return nodes, events


def test_build_counts_and_order():
    nodes, events = small_fixture()
    g = build_graph(nodes, list(reversed(events)))
    assert len(g.nodes) == 3
    assert [e.syscall for e in g.events] == ["clone", "open"]


def test_events_sorted_by_full_key():
    nodes = [NodeRecord(id=i, kind="process", cmdline=i)
             for i in ("a", "b", "c")]
    events = [
        Event(subject="b", object="c", syscall="clone", ts=5),
        Event(subject="a", object="b", syscall="execve", ts=5),
        Event(subject="a", object="b", syscall="clone", ts=5),
    ]
    g = build_graph(nodes, events)
    keys = [e.sort_key() for e in g.events]
    assert keys == sorted(keys)


def test_duplicate_nodes_keep_first():
    nodes = [NodeRecord(id="p1", kind="process", cmdline="first"),
             NodeRecord(id="p1", kind="process", cmdline="second")]
    g = build_graph(nodes, [])
    assert g.node("p1").cmdline == "first"


def test_missing_endpoint_rejected_and_counted():
    nodes, events = small_fixture()
    events.append(Event(subject="p1", object="ghost", syscall="open", ts=30))
    g = build_graph(nodes, events)
    assert len(g.events) == 2
    assert g.rejected_events == 1


def test_zero_events_graph_is_isolated():
    nodes, _ = small_fixture()
    g = build_graph(nodes, [])
    assert g.events == []
    assert g.event_node_ids() == set()


def test_handshake_identity():
    """Sum of endpoint tallies equals twice the event count."""
    rng = random.Random(11)
    nodes = [NodeRecord(id=f"p{i}", kind="process", cmdline="x")
             for i in range(50)]
    nodes += [NodeRecord(id=f"f{i}", kind="file", path="/x")
              for i in range(50)]
    events = []
    while len(events) < 10_000:
        s = f"p{rng.randrange(50)}"
        o = rng.choice([f"p{rng.randrange(50)}", f"f{rng.randrange(50)}"])
        syscall = "clone" if o.startswith("p") else "read"
        events.append(Event(subject=s, object=o, syscall=syscall,
                            ts=rng.randrange(1000)))
    g = build_graph(nodes, events)
    assert sum(g.degree_counts().values()) == 2 * len(g.events)


def test_remove_nothing_is_identity():
    nodes, events = small_fixture()
    g = build_graph(nodes, events)
    assert export_graph(remove_nodes(g, [])) == export_graph(g)


def test_remove_everything():
    nodes, events = small_fixture()
    g = remove_nodes(build_graph(nodes, events), ["p1", "p2", "fA"])
    assert not g.nodes and not g.events


def test_remove_unknown_ids_ignored_and_counted():
    nodes, events = small_fixture()
    g = remove_nodes(build_graph(nodes, events), ["nope", "p2"])
    assert g.ignored_removals == 1
    assert "p2" not in g.nodes


def test_removal_drops_incident_edges_full_scan():
    rng = random.Random(83)
    for _ in range(20):
        nodes, events = random_graph_records(rng)
        g = build_graph(nodes, events)
        victims = {n.id for n in nodes if rng.random() < 0.3}
        h = remove_nodes(g, victims)
        assert not victims & set(h.nodes)
        for ev in h.events:
            assert ev.subject not in victims and ev.object not in victims
        survivors = [ev for ev in g.events
                     if ev.subject not in victims and ev.object not in victims]
        assert h.events == survivors


def test_removal_order_insensitive():
    rng = random.Random(84)
    nodes, events = random_graph_records(rng)
    g = build_graph(nodes, events)
    ids = [n.id for n in nodes]
    a = set(rng.sample(ids, 3))
    b = set(rng.sample(ids, 3))
    combined = remove_nodes(g, a | b)
    staged = remove_nodes(remove_nodes(g, a), b)
    assert export_graph(combined) == export_graph(staged)


def test_export_empty_graph():
    assert export_graph(build_graph([], [])) == ""


def test_jsonl_round_trip_fixpoint():
    """export -> parse -> build -> export lands on identical bytes."""
    rng = random.Random(85)
    for _ in range(10):
        nodes, events = random_graph_records(rng)
        g = build_graph(nodes, events)
        first = export_graph(g)
        nodes2, events2, stats = parse_stream(first.splitlines())
        assert stats.total_event_records() == stats.accepted_events
        g2 = build_graph(nodes2, events2)
        assert g2 == g
        assert export_graph(g2) == first


def test_dot_output_shape():
    nodes, events = small_fixture()
    lines = dot_lines(build_graph(nodes, events))
    assert lines[0].startswith("digraph")
    assert sum(1 for ln in lines if "label=" in ln and "->" not in ln) == 3
    assert sum(1 for ln in lines if "->" in ln) == 2
    assert 'open@20' in "".join(lines)
    assert lines[-1] == "}"


def test_dot_escapes_quotes():
    nodes = [NodeRecord(id="p1", kind="process", cmdline='sh -c "rm x"'),
             NodeRecord(id="p2", kind="process", cmdline="y")]
    events = [Event(subject="p1", object="p2", syscall="clone", ts=1)]
    text = export_graph(build_graph(nodes, events), fmt="dot")
    assert '\\"rm' in text


def test_unknown_export_format_raises():
    with pytest.raises(ValueError):
        export_graph(build_graph([], []), fmt="xml")


def test_summarize_fields():
    nodes, events = small_fixture()
    info = summarize(build_graph(nodes, events))
    assert info["nodes"] == 3
    assert info["processes"] == 2
    assert info["files"] == 1
    assert info["events"] == 2
    assert info["event_nodes"] == 3
    assert info["per_syscall"] == {"clone": 1, "open": 1}


def test_graph_lines_nodes_before_events():
    nodes, events = small_fixture()
    lines = graph_lines(build_graph(nodes, events))
    kinds = ["event" if '"kind":"event"' in ln else "node" for ln in lines]
    assert kinds == ["node", "node", "node", "event", "event"]
