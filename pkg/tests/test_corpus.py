import json

import numpy as np
import pytest

from vidgraph.corpus import (
    Corpus,
    CorpusError,
    FrameEmbedding,
    VideoRecord,
    load_corpus,
    load_queries,
    parse_p6,
    synth_corpus,
    toy_embed,
    write_corpus,
    write_queries,
)

from conftest import make_p6


def write_manifest(tmp_path, dim, videos, vectors, name="corpus.json"):
    manifest = {
        "dim": dim,
        "sample_rate_fps": 2.0,
        "blob_path": "corpus.f32",
        "videos": videos,
    }
    (tmp_path / name).write_text(json.dumps(manifest))
    blob = np.asarray(vectors, dtype="<f4")
    (tmp_path / "corpus.f32").write_bytes(blob.tobytes())
    return tmp_path / name


class TestLoadCorpus:
    def test_two_videos_three_frames(self, tmp_path):
        vecs = np.arange(24, dtype=np.float32).reshape(6, 4)
        path = write_manifest(
            tmp_path,
            4,
            [
                {"video_id": 0, "category": "a", "frame_count": 3, "source_uri": "u0"},
                {"video_id": 1, "category": "b", "frame_count": 3, "source_uri": "u1"},
            ],
            vecs,
        )
        corpus = load_corpus(path)
        assert corpus.frame_count == 6
        assert corpus.dim == 4
        assert [f.ordinal for f in corpus.frames] == [0, 1, 2, 0, 1, 2]
        assert corpus.frames[3].video_id == 1
        assert corpus.frames[3].timestamp_s == pytest.approx(0.0)
        assert corpus.frames[4].timestamp_s == pytest.approx(0.5)
        np.testing.assert_array_equal(corpus.frame_matrix(), vecs)

    def test_truncated_blob_names_offset(self, tmp_path):
        vecs = np.ones((4, 8), dtype=np.float32)
        path = write_manifest(
            tmp_path,
            8,
            [{"video_id": 0, "category": "a", "frame_count": 4}],
            vecs,
        )
        blob = tmp_path / "corpus.f32"
        blob.write_bytes(blob.read_bytes()[:-10])  # cut mid-vector
        with pytest.raises(CorpusError, match=r"truncated at byte 118"):
            load_corpus(path)

    def test_cnn_scale_dimension(self, tmp_path):
        vecs = np.zeros((2, 2048), dtype=np.float32)
        vecs[0, 0] = 1.0
        path = write_manifest(
            tmp_path, 2048, [{"video_id": 0, "category": "a", "frame_count": 2}], vecs
        )
        assert load_corpus(path).dim == 2048

    def test_oversized_blob_reports_mismatch(self, tmp_path):
        vecs = np.ones((3, 4), dtype=np.float32)
        path = write_manifest(
            tmp_path, 4, [{"video_id": 0, "category": "a", "frame_count": 2}], vecs
        )
        with pytest.raises(CorpusError, match="mismatch"):
            load_corpus(path)

    def test_non_finite_values_rejected(self, tmp_path):
        vecs = np.ones((2, 4), dtype=np.float32)
        vecs[1, 2] = np.nan
        path = write_manifest(
            tmp_path, 4, [{"video_id": 7, "category": "a", "frame_count": 2}], vecs
        )
        with pytest.raises(CorpusError, match=r"frame 1 \(video 7.*non-finite"):
            load_corpus(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_corpus(tmp_path / "nope.json")

    def test_roundtrip_blob_byte_exact(self, tmp_path, small_corpus):
        corpus, _ = small_corpus
        write_corpus(corpus, tmp_path / "c.json")
        first = (tmp_path / "c.f32").read_bytes()
        again = load_corpus(tmp_path / "c.json")
        write_corpus(again, tmp_path / "c2.json")
        assert (tmp_path / "c2.f32").read_bytes() == first
        assert [v.video_id for v in again.videos] == [
            v.video_id for v in corpus.videos
        ]

    def test_query_roundtrip(self, tmp_path, small_corpus):
        _, queries = small_corpus
        write_queries(queries, tmp_path / "q.json")
        loaded = load_queries(tmp_path / "q.json")
        assert [q.query_id for q in loaded.queries] == [
            q.query_id for q in queries.queries
        ]
        assert [q.category for q in loaded.queries] == [
            q.category for q in queries.queries
        ]
        for a, b in zip(loaded.queries, queries.queries):
            np.testing.assert_array_equal(a.vector, b.vector)


class TestValidate:
    def _tiny(self):
        videos = [VideoRecord(video_id=0, category="a", frame_count=2)]
        frames = [
            FrameEmbedding(0, 0, 0, 0.0, np.zeros(3, dtype=np.float32)),
            FrameEmbedding(1, 0, 1, 0.5, np.zeros(3, dtype=np.float32)),
        ]
        return Corpus(dim=3, sample_rate_fps=2.0, videos=videos, frames=frames)

    def test_valid(self):
        self._tiny().validate()

    def test_ordinal_gap(self):
        corpus = self._tiny()
        corpus.frames[1] = FrameEmbedding(1, 0, 2, 1.0, np.zeros(3, dtype=np.float32))
        with pytest.raises(CorpusError, match="not contiguous"):
            corpus.validate()

    def test_unknown_video(self):
        corpus = self._tiny()
        corpus.frames[1] = FrameEmbedding(1, 9, 1, 0.5, np.zeros(3, dtype=np.float32))
        with pytest.raises(CorpusError, match="unknown video_id 9"):
            corpus.validate()

    def test_frame_count_mismatch(self):
        corpus = self._tiny()
        corpus.videos[0].frame_count = 3
        with pytest.raises(CorpusError, match="declares 3 frames"):
            corpus.validate()


class TestSynthCorpus:
    def test_determinism(self):
        a, qa = synth_corpus(3, 2, 5, 8, 0.2, seed=42)
        b, qb = synth_corpus(3, 2, 5, 8, 0.2, seed=42)
        np.testing.assert_array_equal(a.frame_matrix(), b.frame_matrix())
        for x, y in zip(qa.queries, qb.queries):
            np.testing.assert_array_equal(x.vector, y.vector)
        c, _ = synth_corpus(3, 2, 5, 8, 0.2, seed=43)
        assert not np.array_equal(a.frame_matrix(), c.frame_matrix())

    def test_noise_zero_frames_equal_anchor(self):
        corpus, queries = synth_corpus(3, 2, 4, 8, 0.0, seed=5)
        by_cat = {}
        for video in corpus.videos:
            by_cat.setdefault(video.category, []).append(video.video_id)
        frames_of = corpus.frames_by_video()
        for cat, vids in by_cat.items():
            ref = frames_of[vids[0]][0].vector
            for vid in vids:
                for f in frames_of[vid]:
                    np.testing.assert_array_equal(f.vector, ref)
        # queries are exactly the anchors too at zero noise
        for q in queries.queries:
            vids = by_cat[q.category]
            np.testing.assert_array_equal(q.vector, frames_of[vids[0]][0].vector)

    def test_own_anchor_cosine_dominates(self):
        # anchors are recoverable as the noise-free frames of the same seed
        anchors_corpus, _ = synth_corpus(3, 1, 1, 32, 0.0, seed=9)
        anchors = {
            v.category: anchors_corpus.frames[i].vector.astype(np.float64)
            for i, v in enumerate(anchors_corpus.videos)
        }
        corpus, _ = synth_corpus(3, 4, 10, 32, 0.1, seed=9)
        cats = corpus.category_of()
        for f in corpus.frames:
            v = f.vector.astype(np.float64)
            own = cats[f.video_id]
            own_cos = v @ anchors[own] / np.linalg.norm(v)
            for cat, anchor in anchors.items():
                if cat != own:
                    other = v @ anchor / np.linalg.norm(v)
                    assert own_cos > other

    def test_temporal_autocorrelation(self):
        corpus, _ = synth_corpus(2, 5, 50, 16, 0.4, seed=11)
        rng = np.random.default_rng(0)
        frames_of = corpus.frames_by_video()

        def cos(a, b):
            a = a.astype(np.float64)
            b = b.astype(np.float64)
            return a @ b / (np.linalg.norm(a) * np.linalg.norm(b))

        adjacent, distant = [], []
        for _ in range(1200):
            video = corpus.videos[rng.integers(len(corpus.videos))]
            frames = frames_of[video.video_id]
            t = int(rng.integers(len(frames) - 1))
            adjacent.append(cos(frames[t].vector, frames[t + 1].vector))
            i = int(rng.integers(len(frames)))
            j = int(rng.integers(len(frames)))
            while abs(i - j) <= 1:
                j = int(rng.integers(len(frames)))
            distant.append(cos(frames[i].vector, frames[j].vector))
        assert np.mean(adjacent) > np.mean(distant)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            synth_corpus(0, 1, 1, 8, 0.1, seed=0)
        with pytest.raises(ValueError):
            synth_corpus(5, 1, 1, 3, 0.1, seed=0)
        with pytest.raises(ValueError):
            synth_corpus(2, 1, 1, 8, -0.5, seed=0)


def block_average_oracle(img, g):
    """Straight-line reimplementation of the grid averaging for tests."""
    h, w, _ = img.shape
    out = np.zeros((g, g, 3))
    counts = np.zeros((g, g))
    for y in range(h):
        for x in range(w):
            by = y * g // h
            bx = x * g // w
            out[by, bx] += img[y, x]
            counts[by, bx] += 1
    for by in range(g):
        for bx in range(g):
            if counts[by, bx]:
                out[by, bx] /= counts[by, bx]
    return out.ravel()


class TestToyEmbed:
    def test_uniform_gray(self):
        data = make_p6(16, 16, lambda x, y: (128, 128, 128))
        vec = toy_embed(data, 75)  # g = 5, occupied = 75: no padding
        assert np.allclose(vec, vec[0])
        assert vec[0] > 0
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-6)

    def test_zero_padding(self):
        data = make_p6(8, 8, lambda x, y: (50, 100, 150))
        vec = toy_embed(data, 30)  # g = 3, occupied = 27, 3 zeros of padding
        assert np.all(vec[27:] == 0)
        assert np.all(vec[:27] > 0)

    def test_deterministic(self):
        data = make_p6(10, 10, lambda x, y: ((x * 13) % 256, y, 200))
        np.testing.assert_array_equal(toy_embed(data, 12), toy_embed(data, 12))

    def test_quadrant_difference_matches_oracle(self):
        base = make_p6(16, 16, lambda x, y: (200, 40, 40))
        other = make_p6(
            16, 16, lambda x, y: (40, 200, 40) if (x < 8 and y < 8) else (200, 40, 40)
        )
        d = 48
        g = 4
        va = toy_embed(base, d)
        vb = toy_embed(other, d)
        cos_ab = float(va @ vb)
        assert cos_ab < 1.0

        for raw, vec in ((base, va), (other, vb)):
            img = parse_p6(raw)
            expected = np.zeros(d)
            expected[: 3 * g * g] = block_average_oracle(img, g)
            expected /= np.linalg.norm(expected)
            np.testing.assert_allclose(vec, expected, atol=1e-12)

    def test_norm_one_for_nonblack(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            data = make_p6(
                7, 9, lambda x, y: tuple(int(v) for v in rng.integers(1, 255, 3))
            )
            assert np.linalg.norm(toy_embed(data, 27)) == pytest.approx(
                1.0, abs=1e-6
            )

    def test_black_image_is_zero_vector(self):
        data = make_p6(4, 4, lambda x, y: (0, 0, 0))
        assert np.all(toy_embed(data, 12) == 0)

    def test_d_not_multiple_of_three(self):
        data = make_p6(4, 4, lambda x, y: (1, 2, 3))
        with pytest.raises(ValueError, match="multiple of 3"):
            toy_embed(data, 16)

    def test_comment_header_parses(self):
        data = make_p6(4, 4, lambda x, y: (9, 9, 9), comment=b"made by tests")
        assert parse_p6(data).shape == (4, 4, 3)

    def test_bad_magic(self):
        with pytest.raises(ValueError, match="bad magic"):
            parse_p6(b"P5\n4 4\n255\n" + b"\x00" * 16)

    def test_truncated_pixels(self):
        data = make_p6(4, 4, lambda x, y: (9, 9, 9))[:-5]
        with pytest.raises(ValueError, match="truncated"):
            parse_p6(data)

    def test_wide_maxval_rejected(self):
        data = b"P6\n2 2\n65535\n" + b"\x00" * 24
        with pytest.raises(ValueError, match="maxval"):
            parse_p6(data)
