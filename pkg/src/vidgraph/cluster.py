"""Corpus-wide k-means over frame embeddings (k-means++ seeding, Lloyd loop).

Frames across all videos are partitioned into K clusters under Euclidean
distance; each cluster is summarized by the mean of its member vectors.
Fitting is deterministic for a given seed: frames are canonicalized to
frame_id order before seeding, ties in nearest-centroid assignment go to
the lowest cluster id, and empty clusters are repaired by donating the
farthest member of the largest cluster.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus

DEFAULT_K = 175
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-4

_CHUNK = 2048


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, d) float64
    assignment: dict[int, int]  # frame_id -> cluster_id
    members: dict[int, list[int]]  # cluster_id -> frame_ids, ascending
    means: np.ndarray  # (k, d) float64; empty cluster rows equal the centroid
    iterations_run: int
    inertia: float
    inertia_history: list[float] = field(default_factory=list)
    frame_ids: np.ndarray | None = None  # (n,) int64 ascending
    labels: np.ndarray | None = None  # (n,) int32 aligned with frame_ids

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def _exact_sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Exact float64 squared Euclidean distances, chunked to bound memory."""
    n = x.shape[0]
    out = np.empty((n, centroids.shape[0]))
    for s in range(0, n, _CHUNK):
        diff = x[s : s + _CHUNK, None, :] - centroids[None, :, :]
        out[s : s + _CHUNK] = (diff * diff).sum(axis=2)
    return out


def _fast_labels(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # ||x-c||^2 = ||x||^2 - 2 x.c + ||c||^2; the ||x||^2 term is constant
    # per row, so argmin over (-2 x.c + ||c||^2) suffices.
    scores = (centroids * centroids).sum(axis=1)[None, :] - 2.0 * (x @ centroids.T)
    return np.argmin(scores, axis=1)


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    idx = int(rng.integers(n))
    centroids[0] = x[idx]
    diff = x - centroids[0]
    closest = (diff * diff).sum(axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with an existing centroid
            idx = int(rng.integers(n))
        centroids[i] = x[idx]
        diff = x - centroids[i]
        np.minimum(closest, (diff * diff).sum(axis=1), out=closest)
    return centroids


def _repair_empty(
    x: np.ndarray, centroids: np.ndarray, labels: np.ndarray, k: int
) -> bool:
    """Move empty clusters onto far members of the largest cluster.

    Returns True if anything changed. Repair can stall when the data has
    fewer distinct points than k; callers must tolerate that.
    """
    changed = False
    counts = np.bincount(labels, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        donor = int(np.argmax(counts))
        if counts[donor] <= 1:
            break
        member_pos = np.flatnonzero(labels == donor)
        diff = x[member_pos] - centroids[donor]
        far = member_pos[int(np.argmax((diff * diff).sum(axis=1)))]
        centroids[empty] = x[far]
        labels[far] = empty
        counts[donor] -= 1
        counts[empty] += 1
        changed = True
    return changed


def _means_for_labels(
    x: np.ndarray, labels: np.ndarray, k: int, fallback: np.ndarray
) -> np.ndarray:
    """Per-cluster means; clusters with no members keep their fallback row."""
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, labels, x)
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    means = fallback.copy()
    nonempty = counts > 0
    means[nonempty] = sums[nonempty] / counts[nonempty, None]
    return means


def lloyd_kmeans(
    x: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[float], int]:
    """Core Lloyd loop on an (n, d) float64 matrix.

    Returns (centroids, labels, means, inertia_history, iterations). The
    final labels are an exact nearest-centroid assignment (float64, ties to
    the lowest cluster id) and the recorded inertia sequence is
    non-increasing.
    """
    n = x.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds number of points {n}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    centroids = _kmeans_pp_init(x, k, rng)
    history: list[float] = []
    labels = np.zeros(n, dtype=np.int64)
    iterations = 0
    for _ in range(max_iter):
        labels = _fast_labels(x, centroids)
        _repair_empty(x, centroids, labels, k)
        diff = x - centroids[labels]
        inertia = float((diff * diff).sum())
        if history and inertia > history[-1]:
            # float noise from the fast assignment path; treat as converged
            break
        history.append(inertia)
        iterations += 1
        new_centroids = _means_for_labels(x, labels, k, centroids)
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift <= tol:
            break

    # Exact final assignment so the published model satisfies the
    # nearest-centroid invariant bit-for-bit, plus a last repair pass.
    for _ in range(k + 1):
        labels = np.argmin(_exact_sq_dists(x, centroids), axis=1)
        if not _repair_empty(x, centroids, labels, k):
            break
    diff = x - centroids[labels]
    final_inertia = float((diff * diff).sum())
    if not history or final_inertia <= history[-1]:
        history.append(final_inertia)
    else:  # only reachable through float noise at the convergence plateau
        history.append(history[-1])
    means = _means_for_labels(x, labels, k, centroids)
    return centroids, labels, means, history, iterations


def fit_clusters(
    corpus: Corpus,
    k: int = DEFAULT_K,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> ClusterModel:
    """Cluster every frame in the corpus into k clusters.

    Deterministic for a given seed regardless of frame list order: frames
    are sorted by frame_id before seeding and iteration.
    """
    if corpus.frame_count == 0:
        raise ValueError("cannot cluster an empty corpus")
    if k > corpus.frame_count:
        raise ValueError(
            f"k={k} exceeds frame count {corpus.frame_count}"
        )
    order = np.argsort([f.frame_id for f in corpus.frames], kind="stable")
    frame_ids = np.array([corpus.frames[i].frame_id for i in order], dtype=np.int64)
    x = corpus.frame_matrix()[order].astype(np.float64)

    rng = np.random.default_rng(seed)
    centroids, labels, means, history, iterations = lloyd_kmeans(
        x, k, rng, max_iter=max_iter, tol=tol
    )

    assignment = {int(fid): int(lab) for fid, lab in zip(frame_ids, labels)}
    members: dict[int, list[int]] = {c: [] for c in range(k)}
    for fid, lab in zip(frame_ids, labels):
        members[int(lab)].append(int(fid))
    return ClusterModel(
        k=k,
        centroids=centroids,
        assignment=assignment,
        members=members,
        means=means,
        iterations_run=iterations,
        inertia=history[-1],
        inertia_history=history,
        frame_ids=frame_ids,
        labels=labels.astype(np.int32),
    )


def assign(model: ClusterModel, vector: np.ndarray) -> int:
    """Nearest centroid under Euclidean distance, lowest id on ties."""
    v = np.asarray(vector, dtype=np.float64).ravel()
    if v.shape[0] != model.dim:
        raise ValueError(
            f"vector has dimension {v.shape[0]}, model expects {model.dim}"
        )
    diff = model.centroids - v
    return int(np.argmin((diff * diff).sum(axis=1)))
