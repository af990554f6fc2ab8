"""Text-to-vector embedding and event-frequency entity weights.

The embedder hashes character n-grams (n in 3..5) of the padded text into a
fixed number of signed dimensions and L2-normalizes the sum. It needs no
training, is reproducible from a seed constant, and sits behind a small
interface so a pretrained-vector file can stand in for it.
"""

from __future__ import annotations

import hashlib
import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from .ingest import KIND_FILE, KIND_NETFLOW, KIND_PROCESS, CorpusStats, NodeRecord

DEFAULT_DIM = 64
DEFAULT_SEED = 97
NGRAM_SIZES = (3, 4, 5)
# A cosine threshold of exactly 1.0 still has to accept the vector it was
# built from after a round of float arithmetic.
COSINE_SLACK = 1e-9


def _seed_key(seed: int) -> bytes:
    return (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")


def embed_text(text: str, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Deterministic L2-normalized vector for a text; empty text maps to e0."""
    if dim < 8:
        raise ValueError(f"dim must be at least 8, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    if not text:
        vec[0] = 1.0
        return vec
    key = _seed_key(seed)
    padded = "<" + text + ">"
    # The whole text counts as one feature alongside its n-grams; the 0x00
    # prefix keeps it out of the n-gram hash domain.
    grams = [b"\x00" + padded.encode("utf-8")]
    for n in NGRAM_SIZES:
        grams.extend(padded[i:i + n].encode("utf-8")
                     for i in range(len(padded) - n + 1))
    for gram in grams:
        h = int.from_bytes(
            hashlib.blake2b(gram, digest_size=8, key=key).digest(), "little")
        sign = 1.0 if h >> 63 else -1.0
        vec[h % dim] += sign
    norm = math.sqrt(float(np.dot(vec, vec)))
    if norm == 0.0:
        vec[:] = 0.0
        vec[0] = 1.0
        return vec
    vec /= norm
    return vec


class HashNgramEmbedder:
    """Default backend: seeded n-gram hashing with a per-text cache."""

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED):
        if dim < 8:
            raise ValueError(f"dim must be at least 8, got {dim}")
        self.dim = dim
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        vec = self._cache.get(text)
        if vec is None:
            vec = embed_text(text, self.dim, self.seed)
            vec.setflags(write=False)
            self._cache[text] = vec
        return vec

    def node_vector(self, node: NodeRecord) -> np.ndarray:
        return self.embed(node.attr_text())


class VectorFileEmbedder:
    """Lookup backend fed by a token-per-line vector file.

    Each line is a token followed by its components, space-separated. Texts
    absent from the file fall back to the hashing scheme so the pipeline never
    stalls on vocabulary gaps; the misses counter makes the gap measurable.
    """

    def __init__(self, path, seed: int = DEFAULT_SEED):
        table: dict[str, np.ndarray] = {}
        dim = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                parts = line.rstrip("\n").split(" ")
                if len(parts) < 2 or not parts[0]:
                    continue
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
                if dim is None:
                    dim = vec.shape[0]
                elif vec.shape[0] != dim:
                    raise ValueError(f"inconsistent vector width in {path}")
                norm = float(np.linalg.norm(vec))
                if norm > 0.0:
                    vec = vec / norm
                vec.setflags(write=False)
                table[parts[0]] = vec
        if dim is None or dim < 8:
            raise ValueError(f"vector file {path} is empty or narrower than 8")
        self.dim = dim
        self.seed = seed
        self.misses = 0
        self._table = table
        self._fallback = HashNgramEmbedder(dim=dim, seed=seed)

    def embed(self, text: str) -> np.ndarray:
        vec = self._table.get(text)
        if vec is None:
            self.misses += 1
            vec = self._fallback.embed(text)
        return vec

    def node_vector(self, node: NodeRecord) -> np.ndarray:
        return self.embed(node.attr_text())


def get_embedder(model: str = "hash-ngrams", dim: int = DEFAULT_DIM,
                 seed: int = DEFAULT_SEED):
    """Build the configured backend: 'hash-ngrams' or 'vectors-file:<path>'."""
    if model == "hash-ngrams":
        return HashNgramEmbedder(dim=dim, seed=seed)
    if model.startswith("vectors-file:"):
        return VectorFileEmbedder(model.split(":", 1)[1], seed=seed)
    raise ValueError(f"unknown embedding model: {model!r}")


@dataclass
class WeightTable:
    """Per-entity log-frequency weights plus the single process weight."""

    file_weight: dict[str, float] = field(default_factory=dict)
    netflow_weight: dict[str, float] = field(default_factory=dict)
    process_weight: float = 0.0

    def weight_for(self, node: NodeRecord) -> float:
        if node.kind == KIND_PROCESS:
            return self.process_weight
        if node.kind == KIND_FILE:
            return self.file_weight.get(node.id, 0.0)
        return self.netflow_weight.get(node.id, 0.0)


def compute_weights(stats: CorpusStats, nodes: dict[str, NodeRecord]) -> WeightTable:
    """ln(P / P_f) per file and netflow entity; process weight = pooled mean.

    Entities that never appear in an event are left out of the table and act
    as weight-0 contributors. An empty corpus has no defined weights.
    """
    total = stats.total_events
    if total == 0:
        raise ValueError("weights are undefined for a corpus with zero events")
    table = WeightTable()
    for node in nodes.values():
        count = stats.per_entity_event_count.get(node.id, 0)
        if count < 1:
            continue
        if node.kind == KIND_FILE:
            table.file_weight[node.id] = math.log(total / count)
        elif node.kind == KIND_NETFLOW:
            table.netflow_weight[node.id] = math.log(total / count)
    pool = list(table.file_weight.values()) + list(table.netflow_weight.values())
    table.process_weight = statistics.fmean(pool) if pool else 0.0
    return table


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity, defined as 0 when either vector is zero."""
    denom = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b)) / denom


def effective_threshold(threshold: float) -> float:
    """Lower the cutoff just enough that exact matches survive rounding."""
    return min(threshold, 1.0 - COSINE_SLACK)
