import numpy as np
import pytest

from vidgraph.cluster import ClusterModel
from vidgraph.corpus import Corpus, FrameEmbedding, VideoRecord, synth_corpus


@pytest.fixture(scope="session")
def small_corpus():
    """3 categories x 4 videos x 12 frames, d=16, mild noise."""
    corpus, queries = synth_corpus(
        n_categories=3,
        videos_per_category=4,
        frames_per_video=12,
        d=16,
        noise=0.1,
        seed=101,
    )
    return corpus, queries


@pytest.fixture(scope="session")
def medium_corpus():
    """6 categories x 10 videos x 20 frames, d=32, noisy enough to mix."""
    corpus, queries = synth_corpus(
        n_categories=6,
        videos_per_category=10,
        frames_per_video=20,
        d=32,
        noise=0.3,
        seed=202,
    )
    return corpus, queries


def corpus_from_sequences(sequences, d=4, seed=0, categories=None):
    """Build a corpus with one video per sequence; vectors are just noise."""
    rng = np.random.default_rng(seed)
    videos = []
    frames = []
    fid = 0
    for vid, seq in enumerate(sequences):
        cat = categories[vid] if categories else "cat"
        videos.append(
            VideoRecord(video_id=vid, category=cat, frame_count=len(seq))
        )
        for ordinal in range(len(seq)):
            frames.append(
                FrameEmbedding(
                    frame_id=fid,
                    video_id=vid,
                    ordinal=ordinal,
                    timestamp_s=ordinal / 2.0,
                    vector=rng.standard_normal(d).astype(np.float32),
                )
            )
            fid += 1
    return Corpus(dim=d, sample_rate_fps=2.0, videos=videos, frames=frames)


def stub_model(corpus, sequences, k):
    """ClusterModel carrying a hand-chosen assignment per sequence entry."""
    assignment = {}
    fid = 0
    for seq in sequences:
        for label in seq:
            assignment[fid] = label
            fid += 1
    members = {c: [] for c in range(k)}
    for f, c in sorted(assignment.items()):
        members[c].append(f)
    d = corpus.dim
    return ClusterModel(
        k=k,
        centroids=np.zeros((k, d)),
        assignment=assignment,
        members=members,
        means=np.zeros((k, d)),
        iterations_run=0,
        inertia=0.0,
    )


def make_p6(width, height, pixel, maxval=255, comment=None):
    """Binary P6 bytes; ``pixel(x, y) -> (r, g, b)`` in 0..maxval."""
    header = b"P6\n"
    if comment:
        header += b"# " + comment + b"\n"
    header += f"{width} {height}\n{maxval}\n".encode()
    body = bytearray()
    for y in range(height):
        for x in range(width):
            body += bytes(pixel(x, y))
    return header + bytes(body)
