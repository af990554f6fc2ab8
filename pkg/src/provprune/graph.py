"""In-memory provenance graph: entities plus time-ordered syscall events."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable

from .ingest import (
    KIND_FILE,
    KIND_NETFLOW,
    KIND_PROCESS,
    Event,
    NodeRecord,
)


@dataclass
class Graph:
    """Nodes keyed by id and events held in global temporal order."""

    nodes: dict[str, NodeRecord] = field(default_factory=dict)
    events: list[Event] = field(default_factory=list)
    # Bookkeeping only; two graphs with equal content compare equal.
    rejected_events: int = field(default=0, compare=False)
    ignored_removals: int = field(default=0, compare=False)

    def node(self, node_id: str) -> NodeRecord:
        return self.nodes[node_id]

    def event_node_ids(self) -> set[str]:
        """Ids of nodes incident to at least one event."""
        incident: set[str] = set()
        for ev in self.events:
            incident.add(ev.subject)
            incident.add(ev.object)
        return incident

    def kind_counts(self) -> Counter:
        return Counter(n.kind for n in self.nodes.values())

    def degree_counts(self) -> Counter:
        """Edge-endpoint tallies; a self-loop contributes 2 to its node."""
        deg: Counter = Counter()
        for ev in self.events:
            deg[ev.subject] += 1
            deg[ev.object] += 1
        return deg


def build_graph(nodes: Iterable[NodeRecord], events: Iterable[Event]) -> Graph:
    """Assemble a graph, sorting events into their global temporal order.

    Duplicate node ids keep the first record seen. Events referencing an
    undeclared endpoint are dropped and counted on the returned graph; the
    parser normally leaves none behind.
    """
    node_map: dict[str, NodeRecord] = {}
    for n in nodes:
        if n.id not in node_map:
            node_map[n.id] = n
    kept = []
    rejected = 0
    for ev in events:
        if ev.subject in node_map and ev.object in node_map:
            kept.append(ev)
        else:
            rejected += 1
    kept.sort(key=Event.sort_key)
    return Graph(nodes=node_map, events=kept, rejected_events=rejected)


def remove_nodes(graph: Graph, node_ids: Iterable[str]) -> Graph:
    """Drop the given nodes and every event incident to any of them.

    Ids not present in the graph are ignored and counted.
    """
    gone = set(node_ids)
    ignored = len(gone - graph.nodes.keys())
    kept_nodes = {nid: n for nid, n in graph.nodes.items() if nid not in gone}
    kept_events = [ev for ev in graph.events
                   if ev.subject not in gone and ev.object not in gone]
    return Graph(nodes=kept_nodes, events=kept_events, ignored_removals=ignored)


def _node_obj(node: NodeRecord) -> dict:
    if node.kind == KIND_PROCESS:
        return {"kind": node.kind, "id": node.id, "cmdline": node.cmdline,
                "ts": node.first_seen}
    if node.kind == KIND_FILE:
        return {"kind": node.kind, "id": node.id, "path": node.path,
                "ts": node.first_seen}
    return {"kind": node.kind, "id": node.id,
            "laddr": node.local_addr, "lport": node.local_port,
            "raddr": node.remote_addr, "rport": node.remote_port,
            "ts": node.first_seen}


def _event_obj(ev: Event) -> dict:
    return {"kind": "event", "syscall": ev.syscall, "subject": ev.subject,
            "object": ev.object, "ts": ev.ts}


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def graph_lines(graph: Graph) -> list[str]:
    """Canonical line-delimited form: nodes sorted by id, then ordered events."""
    lines = [_dumps(_node_obj(n))
             for n in sorted(graph.nodes.values(), key=lambda n: n.id)]
    lines.extend(_dumps(_event_obj(ev)) for ev in graph.events)
    return lines


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def dot_lines(graph: Graph) -> list[str]:
    """Graphviz form with `kind:attribute` node labels and `syscall@ts` edges."""
    lines = ["digraph provenance {"]
    for n in sorted(graph.nodes.values(), key=lambda n: n.id):
        label = _dot_escape(f"{n.kind}:{n.attr_text()[:40]}")
        lines.append(f'  "{_dot_escape(n.id)}" [label="{label}"];')
    for ev in graph.events:
        lines.append(f'  "{_dot_escape(ev.subject)}" -> "{_dot_escape(ev.object)}"'
                     f' [label="{ev.syscall}@{ev.ts}"];')
    lines.append("}")
    return lines


def export_graph(graph: Graph, fmt: str = "jsonl") -> str:
    """Serialize to 'jsonl' (round-trips through the parser) or 'dot'."""
    if fmt == "jsonl":
        lines = graph_lines(graph)
    elif fmt == "dot":
        lines = dot_lines(graph)
    else:
        raise ValueError(f"unknown export format: {fmt!r}")
    return "".join(line + "\n" for line in lines)


def write_graph(graph: Graph, sink: IO[str], fmt: str = "jsonl") -> None:
    sink.write(export_graph(graph, fmt))


def save_graph(graph: Graph, path, fmt: str = "jsonl") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_graph(graph, fh, fmt)


def summarize(graph: Graph) -> dict:
    """Counts used by the command-line info report."""
    kinds = graph.kind_counts()
    syscalls = Counter(ev.syscall for ev in graph.events)
    return {
        "nodes": len(graph.nodes),
        "processes": kinds.get(KIND_PROCESS, 0),
        "files": kinds.get(KIND_FILE, 0),
        "netflows": kinds.get(KIND_NETFLOW, 0),
        "events": len(graph.events),
        "event_nodes": len(graph.event_node_ids()),
        "per_syscall": dict(sorted(syscalls.items())),
    }
