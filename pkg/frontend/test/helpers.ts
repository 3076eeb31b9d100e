// Shared test helpers: a deterministic RNG, payload factories, and a
// stubbed service backend.

import type { FetchLike } from "../src/api.js";
import type { ClusterInfo, RankedVideo, SearchResponse } from "../src/types.js";

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const CATEGORIES = ["music", "sports", "travel"];

export function randomResponse(
  rand: () => number,
  nVideos: number,
): SearchResponse {
  const ids = new Set<number>();
  while (ids.size < nVideos) {
    ids.add(Math.floor(rand() * 500));
  }
  const ranked: RankedVideo[] = [...ids].map((videoId) => ({
    video_id: videoId,
    category: CATEGORIES[Math.floor(rand() * CATEGORIES.length)]!,
    score: Math.round(rand() * 10000) / 10000,
    best_frame_id: Math.floor(rand() * 10000),
  }));
  return {
    ranked_videos: ranked,
    clusters_probed: [...Array(Math.max(1, Math.floor(rand() * 5)))].map(
      (_, i) => i,
    ),
    frames_scored: Math.floor(rand() * 3000),
    latency_ms: rand() * 10,
  };
}

export interface StubBackend {
  fetchImpl: FetchLike;
  calls: Array<{ url: string; body: unknown }>;
  /** Per-request hook: return a response, an error status, or a promise. */
  onSearch: (body: any) => SearchResponse | Promise<SearchResponse>;
  clusterInfo: Map<number, ClusterInfo>;
}

export function stubBackend(
  onSearch: StubBackend["onSearch"],
): StubBackend {
  const backend: StubBackend = {
    calls: [],
    onSearch,
    clusterInfo: new Map(),
    fetchImpl: async (url, init) => {
      const body = init?.body ? JSON.parse(String(init.body)) : null;
      backend.calls.push({ url, body });
      const clusterMatch = url.match(/\/clusters\/(\d+)$/);
      if (clusterMatch) {
        const cid = Number(clusterMatch[1]);
        const info = backend.clusterInfo.get(cid) ?? {
          cluster_id: cid,
          size: 0,
          members: [],
          neighbors: [],
        };
        return jsonResponse(200, info);
      }
      if (url.endsWith("/search")) {
        const out = await backend.onSearch(body);
        return jsonResponse(200, out);
      }
      return jsonResponse(404, { error: "unknown_path" });
    },
  };
  return backend;
}

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export function mountConsoleDom(): {
  results: HTMLElement;
  probes: HTMLElement;
  compare: HTMLElement;
  error: HTMLElement;
} {
  document.body.innerHTML =
    '<div id="results"></div><div id="probes"></div>' +
    '<div id="compare"></div><div id="error"></div>';
  return {
    results: document.getElementById("results")!,
    probes: document.getElementById("probes")!,
    compare: document.getElementById("compare")!,
    error: document.getElementById("error")!,
  };
}
