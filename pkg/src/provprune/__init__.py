"""Frequent-benign-activity extraction and provenance graph reduction."""

__version__ = "0.1.0"

from .embed import (
    DEFAULT_DIM,
    DEFAULT_SEED,
    HashNgramEmbedder,
    VectorFileEmbedder,
    WeightTable,
    compute_weights,
    cosine,
    embed_text,
    get_embedder,
)
from .graph import Graph, build_graph, export_graph, remove_nodes
from .ingest import (
    ANALYZED_SYSCALLS,
    CorpusStats,
    Event,
    NodeRecord,
    ParseStats,
    compute_corpus_stats,
    parse_file,
    parse_stream,
    top_commands,
)
from .label import (
    LabelTable,
    MaliciousNodeList,
    build_malicious_list,
    classify_set,
    label_node_sets,
)
from .nodeset import NodeSet, compose_feature, enumerate_node_sets, featurize_sets
from .reduce import (
    ReductionReport,
    rank_benign_labels,
    reduce_graph,
    representatives,
    sweep_top_n,
)
from .synthgen import GroundTruth, SynthSpec, generate

__all__ = [
    "ANALYZED_SYSCALLS",
    "CorpusStats",
    "DEFAULT_DIM",
    "DEFAULT_SEED",
    "Event",
    "Graph",
    "GroundTruth",
    "HashNgramEmbedder",
    "LabelTable",
    "MaliciousNodeList",
    "NodeRecord",
    "NodeSet",
    "ParseStats",
    "ReductionReport",
    "SynthSpec",
    "VectorFileEmbedder",
    "WeightTable",
    "build_graph",
    "build_malicious_list",
    "classify_set",
    "compose_feature",
    "compute_corpus_stats",
    "compute_weights",
    "cosine",
    "embed_text",
    "enumerate_node_sets",
    "export_graph",
    "featurize_sets",
    "generate",
    "get_embedder",
    "label_node_sets",
    "parse_file",
    "parse_stream",
    "rank_benign_labels",
    "reduce_graph",
    "remove_nodes",
    "representatives",
    "sweep_top_n",
    "top_commands",
]
