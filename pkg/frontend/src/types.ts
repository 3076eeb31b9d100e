// Wire types for the search service JSON API.

export interface RankedVideo {
  video_id: number;
  category: string;
  score: number;
  best_frame_id: number;
}

export interface SearchResponse {
  ranked_videos: RankedVideo[];
  clusters_probed: number[];
  frames_scored: number;
  latency_ms: number;
}

export interface ClusterNeighbor {
  cluster_id: number;
  weight: number;
}

export interface ClusterInfo {
  cluster_id: number;
  size: number;
  members: number[];
  neighbors: ClusterNeighbor[];
}

export interface HealthInfo {
  status: string;
  frames: number;
  clusters: number;
}

export type QueryInput =
  | { kind: "embedding"; embedding: number[] }
  | { kind: "image"; base64: string; label: string }
  | { kind: "frame"; frameId: number };

export interface ServiceError {
  status: number;
  body: unknown;
}
