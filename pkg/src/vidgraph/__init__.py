"""vidgraph: embedding-agnostic video retrieval via transition-weighted
cluster graphs and two-stage cosine search."""

from .corpus import (
    Corpus,
    CorpusError,
    FrameEmbedding,
    Query,
    QuerySet,
    VideoRecord,
    load_corpus,
    load_queries,
    synth_corpus,
    toy_embed,
    write_corpus,
    write_queries,
)
from .cluster import ClusterModel, assign, fit_clusters
from .tgraph import AugmentedEmbeddings, TemporalGraph, augment, build_graph
from .retrieve import (
    RetrievalIndex,
    SearchResult,
    VideoHit,
    VideoTemporalVectors,
    build_index,
    build_video_vectors,
    cosine,
    search,
    search_exhaustive,
    search_videos,
)
from .evalbench import (
    EvalConfig,
    EvalReport,
    bench_speed,
    map_at_k,
    precision_at_k,
    run_eval,
    sweep_clusters,
)
from .store import load_index, save_index

__version__ = "0.1.0"

__all__ = [
    "AugmentedEmbeddings",
    "ClusterModel",
    "Corpus",
    "CorpusError",
    "EvalConfig",
    "EvalReport",
    "FrameEmbedding",
    "Query",
    "QuerySet",
    "RetrievalIndex",
    "SearchResult",
    "TemporalGraph",
    "VideoHit",
    "VideoRecord",
    "VideoTemporalVectors",
    "assign",
    "augment",
    "bench_speed",
    "build_graph",
    "build_index",
    "build_video_vectors",
    "cosine",
    "fit_clusters",
    "load_corpus",
    "load_index",
    "load_queries",
    "map_at_k",
    "precision_at_k",
    "run_eval",
    "save_index",
    "search",
    "search_exhaustive",
    "search_videos",
    "sweep_clusters",
    "synth_corpus",
    "toy_embed",
    "write_corpus",
    "write_queries",
]
