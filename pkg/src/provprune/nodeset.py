"""Five-node activity segments: temporal chain enumeration and features.

A node-set is a simple path of K distinct nodes whose K-1 edges carry
non-decreasing timestamps. Enumeration anchors on each edge in global
temporal order, tries both orientations, and extends depth-first from the
tail of the path, earliest candidate edge first.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .embed import WeightTable
from .graph import Graph
from .ingest import NodeRecord

DEFAULT_SET_SIZE = 5
DEFAULT_CAP_PER_ANCHOR = 8
# Features are composed in fixed-size batches so the arithmetic order never
# depends on corpus size or worker count.
FEATURE_CHUNK = 32768


@dataclass(frozen=True)
class NodeSet:
    """An ordered chain of distinct node ids plus the edges linking them."""

    node_ids: tuple[str, ...]
    edge_indices: tuple[int, ...]
    anchor_ts: int
    feature: np.ndarray | None = field(default=None, compare=False)


def _adjacency(graph: Graph) -> dict[str, tuple[list[int], list[tuple[int, str]]]]:
    """Per node: ascending edge timestamps plus (edge index, neighbor) pairs.

    Self-loop events are left out; a chain can never use one.
    """
    adj: dict[str, list[tuple[int, int, str]]] = {}
    for idx, ev in enumerate(graph.events):
        if ev.subject == ev.object:
            continue
        adj.setdefault(ev.subject, []).append((ev.ts, idx, ev.object))
        adj.setdefault(ev.object, []).append((ev.ts, idx, ev.subject))
    packed = {}
    for node_id, entries in adj.items():
        entries.sort()
        packed[node_id] = ([e[0] for e in entries],
                           [(e[1], e[2]) for e in entries])
    return packed


def enumerate_node_sets(graph: Graph, size: int = DEFAULT_SET_SIZE,
                        cap_per_anchor: int = DEFAULT_CAP_PER_ANCHOR) -> list[NodeSet]:
    """All capped temporal simple paths of `size` nodes, in deterministic order.

    Each result chain is produced exactly once, anchored at its first edge.
    cap_per_anchor bounds how many chains one anchor edge may emit across both
    of its orientations; 0 disables the cap.
    """
    if size < 2:
        raise ValueError(f"set size must be at least 2, got {size}")
    if cap_per_anchor < 0:
        raise ValueError("cap_per_anchor must be 0 (unlimited) or positive")
    adj = _adjacency(graph)
    want_edges = size - 1
    results: list[NodeSet] = []
    budget = cap_per_anchor if cap_per_anchor > 0 else None

    for anchor_idx, ev in enumerate(graph.events):
        if ev.subject == ev.object:
            continue
        remaining = budget
        for start, nxt in ((ev.subject, ev.object), (ev.object, ev.subject)):
            if remaining is not None and remaining <= 0:
                break
            chain_nodes = [start, nxt]
            chain_edges = [anchor_idx]
            visited = {start, nxt}

            def extend(tail: str, last_ts: int) -> bool:
                """Depth-first growth; returns False once the budget is spent."""
                nonlocal remaining
                if len(chain_edges) == want_edges:
                    results.append(NodeSet(node_ids=tuple(chain_nodes),
                                           edge_indices=tuple(chain_edges),
                                           anchor_ts=ev.ts))
                    if remaining is not None:
                        remaining -= 1
                        return remaining > 0
                    return True
                entry = adj.get(tail)
                if entry is None:
                    return True
                ts_list, pairs = entry
                for pos in range(bisect_left(ts_list, last_ts), len(ts_list)):
                    edge_idx, neighbor = pairs[pos]
                    if neighbor in visited:
                        continue
                    chain_nodes.append(neighbor)
                    chain_edges.append(edge_idx)
                    visited.add(neighbor)
                    alive = extend(neighbor, ts_list[pos])
                    visited.discard(neighbor)
                    chain_edges.pop()
                    chain_nodes.pop()
                    if not alive:
                        return False
                return True

            if want_edges == 1:
                results.append(NodeSet(node_ids=tuple(chain_nodes),
                                       edge_indices=tuple(chain_edges),
                                       anchor_ts=ev.ts))
                if remaining is not None:
                    remaining -= 1
            else:
                extend(nxt, ev.ts)
    return results


def compose_feature(chain: list[NodeRecord], weights: WeightTable,
                    embedder) -> np.ndarray:
    """Weighted sum of the chain's node vectors; deliberately not normalized."""
    total = np.zeros(embedder.dim, dtype=np.float64)
    for node in chain:
        total = total + weights.weight_for(node) * embedder.node_vector(node)
    return total


def featurize_sets(sets: list[NodeSet], graph: Graph, weights: WeightTable,
                   embedder) -> list[NodeSet]:
    """Attach feature vectors to enumerated chains in one vectorized pass."""
    if not sets:
        return []
    ids = sorted({nid for s in sets for nid in s.node_ids})
    index = {nid: i for i, nid in enumerate(ids)}
    vectors = np.stack([embedder.node_vector(graph.nodes[nid]) for nid in ids])
    node_weights = np.array([weights.weight_for(graph.nodes[nid]) for nid in ids])

    out: list[NodeSet] = []
    for lo in range(0, len(sets), FEATURE_CHUNK):
        block = sets[lo:lo + FEATURE_CHUNK]
        idx = np.array([[index[nid] for nid in s.node_ids] for s in block])
        # The + 0.0 turns any negative zero from zero-weight terms into the
        # plain zero the sequential composition produces.
        feats = np.einsum("ck,ckd->cd", node_weights[idx], vectors[idx]) + 0.0
        for s, feat in zip(block, feats):
            feat.setflags(write=False)
            out.append(NodeSet(node_ids=s.node_ids, edge_indices=s.edge_indices,
                               anchor_ts=s.anchor_ts, feature=feat))
    return out
