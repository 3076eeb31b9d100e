import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient

from vidgraph.corpus import synth_corpus
from vidgraph.retrieve import build_index, search
from vidgraph.service import MAX_IMAGE_BYTES, create_app

from conftest import make_p6


@pytest.fixture(scope="module")
def setup():
    # dim 48 is a multiple of 3 so pixmap queries embed cleanly
    corpus, queries = synth_corpus(3, 4, 10, 48, 0.15, seed=31)
    index = build_index(corpus, k_clusters=9, alpha=0.5, seed=2)
    client = TestClient(create_app(index))
    return corpus, queries, index, client


class TestInfoEndpoints:
    def test_health(self, setup):
        corpus, _, index, client = setup
        body = client.get("/health").json()
        assert body == {
            "status": "ok",
            "frames": corpus.frame_count,
            "clusters": index.k_clusters,
        }

    def test_stats(self, setup):
        corpus, _, index, client = setup
        body = client.get("/stats").json()
        assert body["dim"] == corpus.dim
        assert body["k_clusters"] == index.k_clusters
        assert body["frames"] == corpus.frame_count
        hist = body["bucket_sizes"]["histogram"]
        assert sum(count for _, count in hist) == index.k_clusters

    def test_videos_count_matches_manifest(self, setup):
        corpus, _, _, client = setup
        body = client.get("/videos").json()
        assert len(body["videos"]) == len(corpus.videos)

    def test_video_detail(self, setup):
        corpus, _, _, client = setup
        body = client.get("/videos/0").json()
        assert body["video_id"] == 0
        assert body["frame_count"] == len(body["frame_ids"])

    def test_video_404(self, setup):
        *_, client = setup
        resp = client.get("/videos/99999")
        assert resp.status_code == 404
        assert resp.json()["error"] == "unknown_video_id"

    def test_cluster_detail_matches_graph_export(self, setup):
        corpus, _, index, client = setup
        export = {}
        for line in index.graph.export_edges().splitlines():
            a, b, w = (int(x) for x in line.split())
            export.setdefault(a, {})[b] = w
            export.setdefault(b, {})[a] = w
        for cid in range(index.k_clusters):
            body = client.get(f"/clusters/{cid}").json()
            got = {n["cluster_id"]: n["weight"] for n in body["neighbors"]}
            assert got == export.get(cid, {})
            assert body["size"] == len(body["members"])

    def test_cluster_404(self, setup):
        *_, index, client = setup
        assert client.get(f"/clusters/{index.k_clusters}").status_code == 404


class TestSearchEndpoint:
    def test_indexed_frame_embedding_is_perfect(self, setup):
        corpus, _, index, client = setup
        frame = corpus.frames[17]
        resp = client.post(
            "/search",
            json={
                "embedding": [float(x) for x in frame.vector],
                "c": index.k_clusters,
                "k": 5,
            },
        )
        assert resp.status_code == 200
        body = resp.json()
        top = body["ranked_videos"][0]
        assert top["video_id"] == frame.video_id
        assert top["score"] == pytest.approx(1.0, abs=1e-6)
        assert "latency_ms" in body

    def test_matches_in_process_search(self, setup):
        corpus, queries, index, client = setup
        rng = np.random.default_rng(8)
        for trial in range(12):
            vec = rng.standard_normal(corpus.dim)
            c = int(rng.integers(1, index.k_clusters + 1))
            k = int(rng.integers(1, 15))
            body = client.post(
                "/search", json={"embedding": list(map(float, vec)), "c": c, "k": k}
            ).json()
            local = search(index, vec, c=c, k=k)
            assert [h["video_id"] for h in body["ranked_videos"]] == [
                h.video_id for h in local.ranked_videos
            ]
            for got, want in zip(body["ranked_videos"], local.ranked_videos):
                assert got["score"] == pytest.approx(want.score, abs=1e-12)
                assert got["best_frame_id"] == want.best_frame_id
            assert body["clusters_probed"] == local.clusters_probed
            assert body["frames_scored"] == local.frames_scored

    def test_frame_id_query(self, setup):
        corpus, _, index, client = setup
        frame = corpus.frames[3]
        body = client.post(
            "/search", json={"frame_id": frame.frame_id, "c": index.k_clusters}
        ).json()
        assert body["ranked_videos"][0]["video_id"] == frame.video_id
        assert body["ranked_videos"][0]["score"] == pytest.approx(1.0, abs=1e-6)

    def test_unknown_frame_id(self, setup):
        *_, client = setup
        resp = client.post("/search", json={"frame_id": 10**9})
        assert resp.status_code == 404
        assert resp.json()["error"] == "unknown_frame_id"

    def test_image_query(self, setup):
        *_, client = setup
        img = make_p6(16, 16, lambda x, y: (max(x * 15, 1), y * 15, 128))
        resp = client.post(
            "/search",
            json={"image": base64.b64encode(img).decode(), "k": 3},
        )
        assert resp.status_code == 200
        assert len(resp.json()["ranked_videos"]) == 3

    def test_dimension_mismatch_error_shape(self, setup):
        corpus, *_, client = setup
        resp = client.post("/search", json={"embedding": [1.0, 2.0]})
        assert resp.status_code == 400
        assert resp.json() == {
            "error": "dimension_mismatch",
            "expected": corpus.dim,
            "got": 2,
        }

    def test_exactly_one_query_field(self, setup):
        corpus, *_, client = setup
        resp = client.post("/search", json={})
        assert resp.status_code == 400
        assert resp.json()["error"] == "exactly_one_query_field_required"
        resp = client.post(
            "/search",
            json={"embedding": [0.0] * corpus.dim, "frame_id": 1},
        )
        assert resp.status_code == 400

    def test_malformed_body(self, setup):
        *_, client = setup
        resp = client.post(
            "/search", content=b"{nope", headers={"content-type": "application/json"}
        )
        assert resp.status_code == 400
        assert resp.json()["error"] == "malformed_body"
        resp = client.post(
            "/search", content=b'"str"', headers={"content-type": "application/json"}
        )
        assert resp.status_code == 400

    def test_invalid_parameters(self, setup):
        corpus, *_, client = setup
        for payload in (
            {"embedding": [0.1] * corpus.dim, "c": 0},
            {"embedding": [0.1] * corpus.dim, "k": -3},
            {"embedding": [0.1] * corpus.dim, "c": "five"},
        ):
            resp = client.post("/search", json=payload)
            assert resp.status_code == 400
            assert resp.json()["error"] == "invalid_parameter"

    def test_invalid_embedding_values(self, setup):
        corpus, *_, client = setup
        resp = client.post(
            "/search", json={"embedding": ["a"] * corpus.dim}
        )
        assert resp.status_code == 400
        assert resp.json()["error"] == "invalid_embedding"

    def test_oversized_image(self, setup):
        *_, client = setup
        big = base64.b64encode(b"\x00" * (MAX_IMAGE_BYTES + 16)).decode()
        resp = client.post("/search", json={"image": big})
        assert resp.status_code == 413
        assert resp.json()["error"] == "image_too_large"

    def test_bad_base64(self, setup):
        *_, client = setup
        resp = client.post("/search", json={"image": "!!!not-base64!!!"})
        assert resp.status_code == 400
        assert resp.json()["error"] == "invalid_image"

    def test_unparseable_image(self, setup):
        *_, client = setup
        resp = client.post(
            "/search", json={"image": base64.b64encode(b"GIF89a....").decode()}
        )
        assert resp.status_code == 400
        assert resp.json()["error"] == "invalid_image"

    def test_purity(self, setup):
        corpus, queries, _, client = setup
        payload = {
            "embedding": [float(x) for x in queries.queries[0].vector],
            "c": 3,
            "k": 5,
        }
        a = client.post("/search", json=payload).json()
        b = client.post("/search", json=payload).json()
        a.pop("latency_ms")
        b.pop("latency_ms")
        assert a == b
