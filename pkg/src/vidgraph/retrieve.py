"""Immutable retrieval index and two-stage cosine search.

Stage 1 ranks clusters by cosine similarity between the query and the
neighbor-augmented cluster embeddings and keeps the top ``c``. Stage 2
scores every raw frame embedding inside those clusters, ranks frames, and
maps them to videos keeping each video's best frame. ``search_exhaustive``
scores all frames and is the oracle the two-stage path must match when
``c`` covers every cluster. A per-video mode clusters each video on its
own, builds its own transition graph, and searches video-level temporal
vectors instead of frames.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cluster import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    ClusterModel,
    fit_clusters,
    lloyd_kmeans,
)
from .corpus import Corpus, VideoRecord
from .tgraph import DEFAULT_ALPHA, AugmentedEmbeddings, TemporalGraph, augment_means, build_graph

DEFAULT_PROBE_C = 5
DEFAULT_TOP_K = 10
DEFAULT_PER_VIDEO_K = 5


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two finite, nonzero vectors, clipped to [-1, 1]."""
    a = np.asarray(u, dtype=np.float64).ravel()
    b = np.asarray(v, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("cosine requires finite vectors")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine is undefined for zero-norm vectors")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class IndexParams:
    k_clusters: int
    alpha: float
    seed: int


@dataclass(frozen=True)
class VideoHit:
    video_id: int
    score: float
    best_frame_id: int


@dataclass
class SearchResult:
    ranked_videos: list[VideoHit]
    ranked_frames: list[tuple[int, float]]
    clusters_probed: list[int]
    frames_scored: int


@dataclass
class RetrievalIndex:
    """Searchable bundle: augmented cluster vectors + cluster-bucketed frames.

    All vector payloads are float32 so that persistence round-trips are
    bit-exact. Frames are held in frame_id order; ``frame_labels[i]`` is the
    cluster of ``frame_ids[i]``.
    """

    dim: int
    params: IndexParams
    cluster_means: np.ndarray  # (k, d) float32, raw means
    cluster_vectors: AugmentedEmbeddings  # float32 augmented vectors
    graph: TemporalGraph
    frame_ids: np.ndarray  # (n,) int64, ascending
    frame_videos: np.ndarray  # (n,) int64
    frame_labels: np.ndarray  # (n,) int32
    videos: list[VideoRecord]
    frame_vectors: np.ndarray  # (n, d) float32
    _buckets: list[np.ndarray] | None = field(default=None, repr=False, compare=False)
    _frame_norms: np.ndarray | None = field(default=None, repr=False, compare=False)
    _cluster_norms: np.ndarray | None = field(default=None, repr=False, compare=False)
    _id_to_pos: dict[int, int] | None = field(default=None, repr=False, compare=False)

    @property
    def k_clusters(self) -> int:
        return self.params.k_clusters

    @property
    def frame_count(self) -> int:
        return int(self.frame_ids.shape[0])

    @property
    def frame_to_video(self) -> dict[int, int]:
        return {int(f): int(v) for f, v in zip(self.frame_ids, self.frame_videos)}

    def buckets(self) -> list[np.ndarray]:
        """Positions (into the frame arrays) of each cluster's members."""
        if self._buckets is None:
            order = np.argsort(self.frame_labels, kind="stable")
            bounds = np.searchsorted(
                self.frame_labels[order], np.arange(self.k_clusters + 1)
            )
            self._buckets = [
                np.sort(order[bounds[c] : bounds[c + 1]])
                for c in range(self.k_clusters)
            ]
        return self._buckets

    def frame_norms(self) -> np.ndarray:
        if self._frame_norms is None:
            self._frame_norms = np.linalg.norm(
                self.frame_vectors.astype(np.float64), axis=1
            )
        return self._frame_norms

    def cluster_norms(self) -> np.ndarray:
        if self._cluster_norms is None:
            self._cluster_norms = np.linalg.norm(
                self.cluster_vectors.vectors.astype(np.float64), axis=1
            )
        return self._cluster_norms

    def position_of(self, frame_id: int) -> int | None:
        if self._id_to_pos is None:
            self._id_to_pos = {int(f): i for i, f in enumerate(self.frame_ids)}
        return self._id_to_pos.get(int(frame_id))

    def equals(self, other: "RetrievalIndex") -> bool:
        """Exact (bit-level) equality of every persisted field."""
        return (
            self.dim == other.dim
            and self.params == other.params
            and np.array_equal(self.cluster_means, other.cluster_means)
            and self.cluster_vectors.alpha == other.cluster_vectors.alpha
            and np.array_equal(
                self.cluster_vectors.vectors, other.cluster_vectors.vectors
            )
            and self.graph.n_nodes == other.graph.n_nodes
            and self.graph.edges == other.graph.edges
            and np.array_equal(self.frame_ids, other.frame_ids)
            and np.array_equal(self.frame_videos, other.frame_videos)
            and np.array_equal(self.frame_labels, other.frame_labels)
            and self.videos == other.videos
            and np.array_equal(self.frame_vectors, other.frame_vectors)
        )


def index_from_model(
    corpus: Corpus,
    model: ClusterModel,
    graph: TemporalGraph,
    alpha: float,
    seed: int,
) -> RetrievalIndex:
    """Pack a fitted cluster model plus graph into a searchable index.

    ``alpha`` is quantized to float32 so the built index and its persisted
    form carry the identical value.
    """
    alpha = float(np.float32(alpha))
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    aug = augment_means(model.means, graph, alpha).astype(np.float32)
    order = np.argsort([f.frame_id for f in corpus.frames], kind="stable")
    frame_ids = np.array(
        [corpus.frames[i].frame_id for i in order], dtype=np.int64
    )
    frame_videos = np.array(
        [corpus.frames[i].video_id for i in order], dtype=np.int64
    )
    frame_labels = np.array(
        [model.assignment[int(f)] for f in frame_ids], dtype=np.int32
    )
    frame_vectors = corpus.frame_matrix()[order].astype(np.float32)
    videos = sorted(corpus.videos, key=lambda v: v.video_id)
    return RetrievalIndex(
        dim=corpus.dim,
        params=IndexParams(k_clusters=model.k, alpha=alpha, seed=seed),
        cluster_means=model.means.astype(np.float32),
        cluster_vectors=AugmentedEmbeddings(alpha=alpha, vectors=aug),
        graph=graph,
        frame_ids=frame_ids,
        frame_videos=frame_videos,
        frame_labels=frame_labels,
        videos=videos,
        frame_vectors=frame_vectors,
    )


def build_index(
    corpus: Corpus,
    k_clusters: int,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> RetrievalIndex:
    """Cluster, build the transition graph, augment, and pack an index."""
    if corpus.frame_count == 0:
        raise ValueError("cannot index an empty corpus")
    model = fit_clusters(corpus, k=k_clusters, seed=seed, max_iter=max_iter, tol=tol)
    graph = build_graph(corpus, model)
    return index_from_model(corpus, model, graph, alpha, seed)


def _prepare_query(index: RetrievalIndex, query: np.ndarray) -> tuple[np.ndarray, float]:
    q = np.asarray(query, dtype=np.float64).ravel()
    if q.shape[0] != index.dim:
        raise ValueError(
            f"query has dimension {q.shape[0]}, index expects {index.dim}"
        )
    if not np.all(np.isfinite(q)):
        raise ValueError("query contains non-finite values")
    qnorm = float(np.linalg.norm(q))
    if qnorm == 0.0:
        raise ValueError("cosine is undefined for zero-norm queries")
    return q, qnorm


def _cosine_rows(
    matrix: np.ndarray, norms: np.ndarray, q: np.ndarray, qnorm: float
) -> np.ndarray:
    safe = np.where(norms == 0.0, 1.0, norms)
    return np.clip((matrix @ q) / (safe * qnorm), -1.0, 1.0)


def _rank_and_map(
    index: RetrievalIndex,
    positions: np.ndarray,
    q: np.ndarray,
    qnorm: float,
    k: int,
    clusters_probed: list[int],
) -> SearchResult:
    """Shared stage 2: score frames at ``positions``, rank, map to videos."""
    scores = _cosine_rows(
        index.frame_vectors[positions], index.frame_norms()[positions], q, qnorm
    )
    fids = index.frame_ids[positions]
    order = np.lexsort((fids, -scores))
    ranked_frames = [
        (int(fids[i]), float(scores[i])) for i in order
    ]
    vids = index.frame_videos[positions]
    hits: list[VideoHit] = []
    seen: set[int] = set()
    for i in order:
        vid = int(vids[i])
        if vid not in seen:
            seen.add(vid)
            hits.append(
                VideoHit(video_id=vid, score=float(scores[i]), best_frame_id=int(fids[i]))
            )
    hits.sort(key=lambda h: (-h.score, h.video_id))
    return SearchResult(
        ranked_videos=hits[:k],
        ranked_frames=ranked_frames,
        clusters_probed=clusters_probed,
        frames_scored=int(positions.shape[0]),
    )


def search(
    index: RetrievalIndex,
    query: np.ndarray,
    c: int = DEFAULT_PROBE_C,
    k: int = DEFAULT_TOP_K,
) -> SearchResult:
    """Two-stage search: probe the top-c clusters, rank their frames."""
    if c < 1 or k < 1:
        raise ValueError("c and k must be >= 1")
    if index.frame_count == 0:
        raise ValueError("index contains no frames")
    q, qnorm = _prepare_query(index, query)

    cscores = _cosine_rows(
        index.cluster_vectors.vectors, index.cluster_norms(), q, qnorm
    )
    cluster_order = np.lexsort((np.arange(index.k_clusters), -cscores))
    kept = cluster_order[: min(c, index.k_clusters)]
    buckets = index.buckets()
    nonempty = [buckets[int(cid)] for cid in kept if buckets[int(cid)].size]
    positions = (
        np.concatenate(nonempty) if nonempty else np.empty(0, dtype=np.int64)
    )
    return _rank_and_map(index, positions, q, qnorm, k, [int(cid) for cid in kept])


def search_exhaustive(
    index: RetrievalIndex, query: np.ndarray, k: int = DEFAULT_TOP_K
) -> SearchResult:
    """Score every indexed frame; the stage-2 oracle for full-probe search."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if index.frame_count == 0:
        raise ValueError("index contains no frames")
    q, qnorm = _prepare_query(index, query)
    positions = np.arange(index.frame_count)
    return _rank_and_map(index, positions, q, qnorm, k, [])


@dataclass
class VideoTemporalVectors:
    """Per-video mode: each video owns its own augmented cluster vectors."""

    dim: int
    per_video_k: int
    alpha: float
    seed: int
    vectors: dict[int, np.ndarray]  # video_id -> (per_video_k, d) float32

    def video_ids(self) -> list[int]:
        return sorted(self.vectors)


def build_video_vectors(
    corpus: Corpus,
    per_video_k: int = DEFAULT_PER_VIDEO_K,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> VideoTemporalVectors:
    """Cluster each video independently and augment along its own graph."""
    alpha = float(np.float32(alpha))
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    short = [v.video_id for v in corpus.videos if v.frame_count < per_video_k]
    if short:
        raise ValueError(
            f"videos {short} have fewer than per_video_k={per_video_k} frames"
        )
    by_video = corpus.frames_by_video()
    vectors: dict[int, np.ndarray] = {}
    for video in corpus.videos:
        frames = sorted(by_video[video.video_id], key=lambda f: f.ordinal)
        x = np.stack([f.vector for f in frames]).astype(np.float64)
        rng = np.random.default_rng(np.random.SeedSequence([seed, video.video_id]))
        _, labels, means, _, _ = lloyd_kmeans(
            x, per_video_k, rng, max_iter=max_iter, tol=tol
        )
        edges: dict[tuple[int, int], int] = {}
        for prev, cur in zip(labels[:-1], labels[1:]):
            if prev != cur:
                key = (int(min(prev, cur)), int(max(prev, cur)))
                edges[key] = edges.get(key, 0) + 1
        graph = TemporalGraph(n_nodes=per_video_k, edges=edges)
        vectors[video.video_id] = augment_means(means, graph, alpha).astype(np.float32)
    return VideoTemporalVectors(
        dim=corpus.dim,
        per_video_k=per_video_k,
        alpha=alpha,
        seed=seed,
        vectors=vectors,
    )


def search_videos(
    vectors: VideoTemporalVectors, query: np.ndarray, k: int = DEFAULT_TOP_K
) -> SearchResult:
    """Rank videos by max cosine between the query and their temporal vectors.

    There is no frame ranking in this mode: ``ranked_frames`` is empty and
    ``best_frame_id`` is -1.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(query, dtype=np.float64).ravel()
    if q.shape[0] != vectors.dim:
        raise ValueError(
            f"query has dimension {q.shape[0]}, vectors expect {vectors.dim}"
        )
    qnorm = float(np.linalg.norm(q))
    if qnorm == 0.0:
        raise ValueError("cosine is undefined for zero-norm queries")
    hits: list[VideoHit] = []
    scored = 0
    for vid in vectors.video_ids():
        mat = vectors.vectors[vid].astype(np.float64)
        norms = np.linalg.norm(mat, axis=1)
        scores = _cosine_rows(mat, norms, q, qnorm)
        scored += mat.shape[0]
        hits.append(
            VideoHit(video_id=vid, score=float(scores.max()), best_frame_id=-1)
        )
    hits.sort(key=lambda h: (-h.score, h.video_id))
    return SearchResult(
        ranked_videos=hits[:k],
        ranked_frames=[],
        clusters_probed=[],
        frames_scored=scored,
    )


def timed_search(
    index: RetrievalIndex, query: np.ndarray, c: int, k: int
) -> tuple[SearchResult, float]:
    """Search plus wall-clock latency in milliseconds."""
    t0 = time.perf_counter()
    result = search(index, query, c=c, k=k)
    return result, (time.perf_counter() - t0) * 1e3
