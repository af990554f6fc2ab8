import random

import numpy as np
import pytest

from provprune.graph import build_graph
from provprune.ingest import Event, NodeRecord
from provprune.label import (
    BENIGN,
    MALICIOUS,
    MaliciousNodeList,
    build_malicious_list,
    classify_set,
    label_node_sets,
    label_table_from_json,
    parse_ioc_file,
)
from provprune.nodeset import NodeSet


def make_set(ids, feature, seq=0):
    feat = np.asarray(feature, dtype=np.float64)
    return NodeSet(node_ids=tuple(ids), edge_indices=tuple(range(len(ids) - 1)),
                   anchor_ts=seq, feature=feat)


def unit(direction, dim=8):
    v = np.zeros(dim)
    v[direction] = 1.0
    return v


def test_ioc_file_parsing(tmp_path):
    path = tmp_path / "iocs.tsv"
    path.write_text("# note\n"
                    "ioc\t/tmp/evil.sh\n"
                    "\n"
                    "id\tnode-42\n"
                    "ioc\t198.51.100.7:1337\n")
    iocs, explicit = parse_ioc_file(path)
    assert iocs == ["/tmp/evil.sh", "198.51.100.7:1337"]
    assert explicit == ["node-42"]


def test_ioc_file_rejects_unknown_directive(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("hash\tdeadbeef\n")
    with pytest.raises(ValueError):
        parse_ioc_file(path)


def test_ioc_file_rejects_missing_tab(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("ioc /tmp/evil\n")
    with pytest.raises(ValueError):
        parse_ioc_file(path)


def five_node_graph():
    nodes = [
        NodeRecord(id="pA", kind="process", cmdline="loader"),
        NodeRecord(id="pB", kind="process", cmdline="viewer"),
        NodeRecord(id="fEvil", kind="file", path="/opt/payload.bin"),
        NodeRecord(id="fLog", kind="file", path="/var/log/app"),
        NodeRecord(id="pC", kind="process", cmdline="idle"),
    ]
    events = [
        Event(subject="pA", object="fEvil", syscall="read", ts=1),
        Event(subject="pB", object="fEvil", syscall="read", ts=2),
        Event(subject="pB", object="fLog", syscall="write", ts=3),
    ]
    return build_graph(nodes, events)


def test_empty_inputs_give_empty_list():
    out = build_malicious_list(five_node_graph(), [], [])
    assert out.ids == set()
    assert out.warnings == []


def test_ioc_match_expands_one_hop():
    """One infected file read by two processes flags exactly three nodes."""
    out = build_malicious_list(five_node_graph(), ["payload.bin"], [])
    assert out.ids == {"fEvil", "pA", "pB"}
    assert out.provenance["fEvil"] == "payload.bin"
    assert out.provenance["pA"] == "event-adjacent"
    assert out.provenance["pB"] == "event-adjacent"


def test_expansion_is_single_hop():
    # pB touches fEvil and fLog; fLog must stay clean.
    out = build_malicious_list(five_node_graph(), ["payload.bin"], [])
    assert "fLog" not in out.ids


def test_explicit_ids_do_not_expand():
    out = build_malicious_list(five_node_graph(), [], ["fEvil"])
    assert out.ids == {"fEvil"}
    assert out.provenance["fEvil"] == "explicit"


def test_unmatched_ioc_warned_not_fatal():
    out = build_malicious_list(five_node_graph(), ["definitely-absent"], [])
    assert out.ids == set()
    assert any("definitely-absent" in w for w in out.warnings)


def test_unknown_explicit_id_warned():
    out = build_malicious_list(five_node_graph(), [], ["ghost"])
    assert out.ids == set()
    assert any("ghost" in w for w in out.warnings)


def test_direct_match_provenance_beats_adjacency():
    g = five_node_graph()
    out = build_malicious_list(g, ["payload.bin", "loader"], [])
    assert out.provenance["pA"] == "loader"


def test_classify_set_rules():
    mal = MaliciousNodeList(ids={"x"})
    dirty = make_set(["a", "x", "b", "c", "d"], unit(0))
    clean = make_set(["a", "e", "b", "c", "d"], unit(0))
    all_bad = make_set(["x"] * 1 + ["y", "z", "w", "v"], unit(0))
    mal_all = MaliciousNodeList(ids={"x", "y", "z", "w", "v"})
    assert classify_set(dirty, mal) == MALICIOUS
    assert classify_set(clean, mal) == BENIGN
    assert classify_set(all_bad, mal_all) == MALICIOUS


def test_identical_features_share_one_label():
    sets = [make_set(["a", "b"], unit(1)), make_set(["c", "d"], unit(1))]
    table = label_node_sets(sets, MaliciousNodeList(), threshold=1.0)
    assert len(table.labels) == 1
    assert table.labels[0].member_count == 2
    assert table.labels[0].polarity == BENIGN
    assert table.assignment == [0, 0]


def test_scaled_feature_still_matches_at_threshold_one():
    sets = [make_set(["a", "b"], unit(2)),
            make_set(["c", "d"], 3.0 * unit(2))]
    table = label_node_sets(sets, MaliciousNodeList(), threshold=1.0)
    assert len(table.labels) == 1


def test_order_sensitivity_of_polarity():
    """A malicious first member poisons the label for identical successors."""
    mal = MaliciousNodeList(ids={"a"})
    sets = [make_set(["a", "b"], unit(3)), make_set(["c", "d"], unit(3))]
    table = label_node_sets(sets, mal, threshold=1.0)
    assert len(table.labels) == 1
    assert table.labels[0].polarity == MALICIOUS
    assert table.labels[0].member_count == 2


def test_distinct_features_distinct_labels():
    sets = [make_set([f"n{i}", f"m{i}"], unit(i)) for i in range(6)]
    table = label_node_sets(sets, MaliciousNodeList(), threshold=1.0)
    assert len(table.labels) == 6
    assert [lb.created_seq for lb in table.labels] == list(range(6))


def test_representative_is_first_member_frozen():
    sets = [make_set(["a", "b"], 2.0 * unit(4)),
            make_set(["c", "d"], 5.0 * unit(4))]
    table = label_node_sets(sets, MaliciousNodeList(), threshold=1.0)
    assert table.labels[0].representative[4] == 2.0


def test_lower_threshold_groups_more():
    a = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    b = np.array([0.9, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    sets = [make_set(["a", "b"], a), make_set(["c", "d"], b)]
    strict = label_node_sets(sets, MaliciousNodeList(), threshold=1.0)
    loose = label_node_sets(sets, MaliciousNodeList(), threshold=0.9)
    assert len(strict.labels) == 2
    assert len(loose.labels) == 1


def test_tie_goes_to_earliest_label():
    """Two orthogonal reps both sit at cosine 0 from a third axis; the
    earlier label wins the tie when the cutoff admits zero."""
    sets = [make_set(["a", "b"], unit(0)), make_set(["c", "d"], unit(1)),
            make_set(["e", "f"], unit(2))]
    table = label_node_sets(sets, MaliciousNodeList(), threshold=0.0)
    assert table.assignment == [0, 0, 0]


def test_zero_vector_sets_always_mint():
    z = np.zeros(8)
    sets = [make_set(["a", "b"], z), make_set(["c", "d"], z),
            make_set(["e", "f"], unit(0))]
    table = label_node_sets(sets, MaliciousNodeList(), threshold=0.5)
    assert table.zero_vector_sets == 2
    assert len(table.labels) == 3


def test_zero_vector_rep_matches_only_when_cutoff_admits_zero():
    z = np.zeros(8)
    sets = [make_set(["a", "b"], z), make_set(["c", "d"], unit(1))]
    at_zero = label_node_sets(sets, MaliciousNodeList(), threshold=0.0)
    assert at_zero.assignment == [0, 0]
    above_zero = label_node_sets(sets, MaliciousNodeList(), threshold=0.5)
    assert above_zero.assignment == [0, 1]


def test_threshold_validation():
    with pytest.raises(ValueError):
        label_node_sets([], MaliciousNodeList(), threshold=1.5)


def test_unfeaturized_set_rejected():
    bare = NodeSet(node_ids=("a", "b"), edge_indices=(0,), anchor_ts=0)
    with pytest.raises(ValueError):
        label_node_sets([bare], MaliciousNodeList())


def test_assignment_totality_random():
    rng = random.Random(606)
    pool = [unit(i) for i in range(8)]
    sets = []
    for i in range(200):
        feat = rng.choice(pool) * rng.choice([1.0, 2.0])
        sets.append(make_set([f"x{i}", f"y{i}"], feat, seq=i))
    mal = MaliciousNodeList(ids={"x3", "x77"})
    table = label_node_sets(sets, mal, threshold=1.0)
    assert len(table.assignment) == len(sets)
    assert table.member_total() == len(sets)
    label_ids = {lb.label_id for lb in table.labels}
    assert set(table.assignment) <= label_ids


def test_threshold_monotone_label_count():
    rng = random.Random(607)
    sets = []
    for i in range(60):
        feat = np.array([rng.gauss(0, 1) for _ in range(8)])
        sets.append(make_set([f"x{i}", f"y{i}"], feat, seq=i))
    counts = []
    for threshold in (1.0, 0.95, 0.8, 0.5, 0.0, -1.0):
        table = label_node_sets(sets, MaliciousNodeList(), threshold=threshold)
        counts.append(len(table.labels))
    assert counts == sorted(counts, reverse=True)


def test_polarity_sound_at_creation():
    rng = random.Random(608)
    mal = MaliciousNodeList(ids={f"x{i}" for i in range(0, 40, 7)})
    sets = []
    for i in range(40):
        feat = np.array([rng.gauss(0, 1) for _ in range(8)])
        sets.append(make_set([f"x{i}", f"y{i}"], feat, seq=i))
    table = label_node_sets(sets, mal, threshold=1.0)
    first_member = {}
    for idx, label_id in enumerate(table.assignment):
        first_member.setdefault(label_id, idx)
    for lb in table.labels:
        founder = sets[first_member[lb.label_id]]
        expected = MALICIOUS if set(founder.node_ids) & mal.ids else BENIGN
        assert lb.polarity == expected


def test_table_json_round_trip():
    sets = [make_set(["a", "b"], unit(1)), make_set(["c", "d"], unit(2))]
    table = label_node_sets(sets, MaliciousNodeList(ids={"c"}), threshold=1.0)
    text = table.to_json()
    back = label_table_from_json(text)
    assert back.to_json() == text
    assert back.labels[1].polarity == MALICIOUS
    assert (back.labels[0].representative == table.labels[0].representative).all()


def test_labeling_deterministic_bytes():
    rng = random.Random(609)
    sets = []
    for i in range(100):
        feat = np.array([rng.gauss(0, 1) for _ in range(8)])
        sets.append(make_set([f"x{i}", f"y{i}"], feat, seq=i))
    sets_twice = [make_set(list(s.node_ids), np.array(s.feature), seq=i)
                  for i, s in enumerate(sets)]
    a = label_node_sets(sets, MaliciousNodeList(), threshold=0.7).to_json()
    b = label_node_sets(sets_twice, MaliciousNodeList(), threshold=0.7).to_json()
    assert a == b
