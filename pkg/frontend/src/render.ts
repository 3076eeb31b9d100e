// DOM rendering. Results are always rendered in response order: the
// console never re-sorts what the service ranked.

import type { ClusterInfo, SearchResponse } from "./types.js";
import type { RankMarker } from "./diff.js";

export function formatScore(score: number): string {
  return score.toFixed(4);
}

export function renderResults(
  doc: Document,
  container: HTMLElement,
  response: SearchResponse,
): void {
  container.textContent = "";
  const list = doc.createElement("ol");
  list.className = "results";
  for (const hit of response.ranked_videos) {
    const row = doc.createElement("li");
    row.className = "result-row";
    row.dataset.videoId = String(hit.video_id);

    const title = doc.createElement("span");
    title.className = "video-title";
    title.textContent = `video ${hit.video_id}`;
    row.appendChild(title);

    const badge = doc.createElement("span");
    badge.className = "category-badge";
    badge.textContent = hit.category;
    row.appendChild(badge);

    const score = doc.createElement("span");
    score.className = "score";
    score.textContent = formatScore(hit.score);
    row.appendChild(score);

    const frame = doc.createElement("span");
    frame.className = "best-frame";
    frame.textContent = `best frame ${hit.best_frame_id}`;
    row.appendChild(frame);

    list.appendChild(row);
  }
  container.appendChild(list);

  const summary = doc.createElement("p");
  summary.className = "summary";
  summary.textContent =
    `${response.ranked_videos.length} videos, ` +
    `${response.frames_scored} frames scored, ` +
    `${response.latency_ms.toFixed(1)} ms`;
  container.appendChild(summary);
}

export function renderProbePanel(
  doc: Document,
  container: HTMLElement,
  response: SearchResponse,
  clusterInfo: Map<number, ClusterInfo>,
): void {
  container.textContent = "";
  const heading = doc.createElement("h3");
  heading.textContent = `clusters probed (${response.clusters_probed.length})`;
  container.appendChild(heading);
  const list = doc.createElement("ul");
  list.className = "probe-list";
  for (const cid of response.clusters_probed) {
    const item = doc.createElement("li");
    item.dataset.clusterId = String(cid);
    const info = clusterInfo.get(cid);
    if (info) {
      const neighbors = info.neighbors
        .map((n) => `${n.cluster_id}(w=${n.weight})`)
        .join(", ");
      item.textContent =
        `cluster ${cid}: ${info.size} frames` +
        (neighbors ? `, neighbors ${neighbors}` : ", no neighbors");
    } else {
      item.textContent = `cluster ${cid}`;
    }
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderCompare(
  doc: Document,
  container: HTMLElement,
  left: { c: number; response: SearchResponse },
  right: { c: number; response: SearchResponse },
  markers: RankMarker[],
): void {
  container.textContent = "";
  const wrap = doc.createElement("div");
  wrap.className = "compare";

  const panels: Array<[string, SearchResponse]> = [
    [`c = ${left.c}`, left.response],
    [`c = ${right.c}`, right.response],
  ];
  const markerByVideo = new Map(markers.map((m) => [m.videoId, m]));

  panels.forEach(([label, response], side) => {
    const panel = doc.createElement("div");
    panel.className = side === 0 ? "panel panel-left" : "panel panel-right";
    const heading = doc.createElement("h4");
    heading.textContent = `${label} — ${response.frames_scored} frames scored`;
    panel.appendChild(heading);
    const list = doc.createElement("ol");
    for (const hit of response.ranked_videos) {
      const row = doc.createElement("li");
      row.dataset.videoId = String(hit.video_id);
      let text = `video ${hit.video_id} ${formatScore(hit.score)}`;
      if (side === 1) {
        const marker = markerByVideo.get(hit.video_id);
        if (marker) {
          row.dataset.movement = marker.movement;
          if (marker.movement === "new") {
            text += " [new]";
          } else if (marker.movement !== "same") {
            const arrow = marker.movement === "up" ? "▲" : "▼";
            text += ` [${arrow}${Math.abs(marker.delta)}]`;
          }
        }
      }
      row.textContent = text;
      list.appendChild(row);
    }
    panel.appendChild(list);
    wrap.appendChild(panel);
  });
  container.appendChild(wrap);
}

export function renderErrorBanner(
  doc: Document,
  container: HTMLElement,
  message: string,
): void {
  container.textContent = "";
  const banner = doc.createElement("div");
  banner.className = "error-banner";
  banner.textContent = message;
  container.appendChild(banner);
}
