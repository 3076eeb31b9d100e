"""Transition graph over clusters and neighbor-augmented embeddings.

Within each video, every consecutive frame pair whose clusters differ adds
one count to the undirected edge between those clusters; self-transitions
and cross-video pairs add nothing. Augmentation re-injects this temporal
structure into the cluster representations: each cluster mean is convexly
combined with the edge-weighted mean of its first-order neighbors' means.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .cluster import ClusterModel
from .corpus import Corpus

DEFAULT_ALPHA = 0.5


@dataclass
class TemporalGraph:
    n_nodes: int
    edges: dict[tuple[int, int], int]  # key (a, b) with a < b -> transition count

    def neighbors(self, node: int) -> list[tuple[int, int]]:
        """(neighbor, weight) pairs for one node, sorted by neighbor id."""
        out = []
        for (a, b), w in self.edges.items():
            if a == node:
                out.append((b, w))
            elif b == node:
                out.append((a, w))
        out.sort()
        return out

    def total_weight(self) -> int:
        return sum(self.edges.values())

    def export_edges(self) -> str:
        """Debug export: one line "a b w" per edge, sorted by (a, b)."""
        lines = [f"{a} {b} {w}" for (a, b), w in sorted(self.edges.items())]
        return "\n".join(lines) + ("\n" if lines else "")


@dataclass
class AugmentedEmbeddings:
    alpha: float
    vectors: np.ndarray  # (k, d), row per cluster id


def build_graph(corpus: Corpus, model: ClusterModel) -> TemporalGraph:
    """Count cluster transitions along each video's frame sequence."""
    counts: Counter[tuple[int, int]] = Counter()
    ordered = sorted(corpus.frames, key=lambda f: (f.video_id, f.ordinal))
    prev_video: int | None = None
    prev_cluster: int | None = None
    for frame in ordered:
        try:
            cur = model.assignment[frame.frame_id]
        except KeyError:
            raise ValueError(
                f"frame {frame.frame_id} (video {frame.video_id}) "
                "is not assigned in the cluster model"
            ) from None
        if frame.video_id == prev_video and cur != prev_cluster:
            a, b = (prev_cluster, cur) if prev_cluster < cur else (cur, prev_cluster)
            counts[(a, b)] += 1
        prev_video = frame.video_id
        prev_cluster = cur
    return TemporalGraph(n_nodes=model.k, edges=dict(counts))


def augment_means(
    means: np.ndarray, graph: TemporalGraph, alpha: float
) -> np.ndarray:
    """alpha * own mean + (1 - alpha) * edge-weighted mean of neighbor means."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    k = means.shape[0]
    out = means.copy()
    weights = np.zeros(k)
    pulls = np.zeros_like(means)
    for (a, b), w in graph.edges.items():
        weights[a] += w
        weights[b] += w
        pulls[a] += w * means[b]
        pulls[b] += w * means[a]
    connected = weights > 0
    out[connected] = (
        alpha * means[connected]
        + (1.0 - alpha) * pulls[connected] / weights[connected, None]
    )
    return out


def augment(
    model: ClusterModel, graph: TemporalGraph, alpha: float = DEFAULT_ALPHA
) -> AugmentedEmbeddings:
    """Neighbor-augmented cluster embeddings.

    Isolated clusters keep their mean unchanged; alpha=1 returns the means
    exactly.
    """
    if graph.n_nodes != model.k:
        raise ValueError(
            f"graph has {graph.n_nodes} nodes, model has {model.k} clusters"
        )
    return AugmentedEmbeddings(
        alpha=alpha, vectors=augment_means(model.means, graph, alpha)
    )
