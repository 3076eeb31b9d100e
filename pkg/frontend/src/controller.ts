// Console state and orchestration. One search is in flight at a time:
// submitting again aborts the pending request and suppresses its render.

import { ServiceClient, ServiceRequestError } from "./api.js";
import { droppedVideos, rankMarkers } from "./diff.js";
import {
  renderCompare,
  renderErrorBanner,
  renderProbePanel,
  renderResults,
} from "./render.js";
import type { ClusterInfo, QueryInput, SearchResponse } from "./types.js";

export interface ConsoleElements {
  results: HTMLElement;
  probes: HTMLElement;
  compare: HTMLElement;
  error: HTMLElement;
}

export interface ConsoleState {
  query: QueryInput | null;
  c: number;
  k: number;
  lastResponse: SearchResponse | null;
  lastProbeInfo: Map<number, ClusterInfo>;
}

export class Console {
  state: ConsoleState = {
    query: null,
    c: 5,
    k: 10,
    lastResponse: null,
    lastProbeInfo: new Map(),
  };
  private seq = 0;
  private inflight: AbortController | null = null;

  constructor(
    private doc: Document,
    private els: ConsoleElements,
    public client: ServiceClient,
  ) {}

  setQuery(query: QueryInput): void {
    this.state.query = query;
  }

  /** Run the current query; renders results and the probed-cluster panel. */
  async submit(): Promise<SearchResponse | null> {
    if (!this.state.query) {
      renderErrorBanner(this.doc, this.els.error, "select a query first");
      return null;
    }
    const token = ++this.seq;
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const response = await this.client.search(
        this.state.query,
        this.state.c,
        this.state.k,
        controller.signal,
      );
      if (token !== this.seq) {
        return null; // a newer submission took over
      }
      const probeInfo = await this.fetchProbeInfo(response, controller.signal);
      if (token !== this.seq) {
        return null;
      }
      this.state.lastResponse = response;
      this.state.lastProbeInfo = probeInfo;
      this.els.error.textContent = "";
      renderResults(this.doc, this.els.results, response);
      renderProbePanel(this.doc, this.els.probes, response, probeInfo);
      return response;
    } catch (err) {
      if (token !== this.seq) {
        return null;
      }
      this.renderError(err);
      return null;
    }
  }

  /** Re-run the last query with a different c and show both rankings. */
  async tuneAndCompare(newC: number): Promise<void> {
    const previous = this.state.lastResponse;
    if (!previous || !this.state.query) {
      renderErrorBanner(this.doc, this.els.error, "run a search first");
      return;
    }
    const previousC = this.state.c;
    const token = ++this.seq;
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const response = await this.client.search(
        this.state.query,
        newC,
        this.state.k,
        controller.signal,
      );
      if (token !== this.seq) {
        return;
      }
      const before = previous.ranked_videos.map((h) => h.video_id);
      const after = response.ranked_videos.map((h) => h.video_id);
      const markers = rankMarkers(before, after);
      renderCompare(
        this.doc,
        this.els.compare,
        { c: previousC, response: previous },
        { c: newC, response },
        markers,
      );
      this.els.compare.dataset.dropped = droppedVideos(before, after).join(",");
    } catch (err) {
      if (token !== this.seq) {
        return;
      }
      this.renderError(err);
    }
  }

  private async fetchProbeInfo(
    response: SearchResponse,
    signal: AbortSignal,
  ): Promise<Map<number, ClusterInfo>> {
    const info = new Map<number, ClusterInfo>();
    await Promise.all(
      response.clusters_probed.map(async (cid) => {
        try {
          info.set(cid, await this.client.cluster(cid, signal));
        } catch {
          // panel degrades to bare cluster ids when detail lookups fail
        }
      }),
    );
    return info;
  }

  private renderError(err: unknown): void {
    if (err instanceof ServiceRequestError) {
      renderErrorBanner(
        this.doc,
        this.els.error,
        `service error ${err.status}: ${JSON.stringify(err.body)}`,
      );
    } else {
      renderErrorBanner(this.doc, this.els.error, `network failure: ${err}`);
    }
  }
}
