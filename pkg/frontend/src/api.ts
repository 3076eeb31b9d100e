// Thin client for the search service. The fetch implementation is
// injectable so component tests can stub the whole backend.

import type {
  ClusterInfo,
  HealthInfo,
  QueryInput,
  SearchResponse,
  ServiceError,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ServiceRequestError extends Error implements ServiceError {
  constructor(
    public status: number,
    public body: unknown,
  ) {
    super(`service returned ${status}`);
  }
}

function searchPayload(query: QueryInput, c: number, k: number): object {
  switch (query.kind) {
    case "embedding":
      return { embedding: query.embedding, c, k };
    case "image":
      return { image: query.base64, c, k };
    case "frame":
      return { frame_id: query.frameId, c, k };
  }
}

export class ServiceClient {
  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit & { signal?: AbortSignal }): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl.replace(/\/$/, "") + path, init);
    const body = await res.json().catch(() => null);
    if (!res.ok) {
      throw new ServiceRequestError(res.status, body);
    }
    return body as T;
  }

  health(): Promise<HealthInfo> {
    return this.request("/health");
  }

  cluster(id: number, signal?: AbortSignal): Promise<ClusterInfo> {
    return this.request(`/clusters/${id}`, { signal });
  }

  search(
    query: QueryInput,
    c: number,
    k: number,
    signal?: AbortSignal,
  ): Promise<SearchResponse> {
    return this.request("/search", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(searchPayload(query, c, k)),
      signal,
    });
  }
}
