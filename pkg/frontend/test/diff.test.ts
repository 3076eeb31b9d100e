import { describe, expect, it } from "vitest";

import { droppedVideos, rankMarkers } from "../src/diff.js";
import type { RankMarker } from "../src/diff.js";
import { mulberry32 } from "./helpers.js";

/** Independent positional-diff oracle: literal indexOf comparison. */
function oracle(before: number[], after: number[]): RankMarker[] {
  return after.map((videoId, i) => {
    const prev = before.indexOf(videoId);
    if (prev === -1) {
      return { videoId, movement: "new" as const, delta: 0 };
    }
    if (prev === i) {
      return { videoId, movement: "same" as const, delta: 0 };
    }
    return {
      videoId,
      movement: prev > i ? ("up" as const) : ("down" as const),
      delta: prev - i,
    };
  });
}

function randomIds(rand: () => number, n: number): number[] {
  const ids = new Set<number>();
  while (ids.size < n) {
    ids.add(Math.floor(rand() * 40));
  }
  return [...ids];
}

describe("rankMarkers", () => {
  it("identical lists are all 'same'", () => {
    const markers = rankMarkers([1, 2, 3], [1, 2, 3]);
    expect(markers.every((m) => m.movement === "same")).toBe(true);
  });

  it("disjoint lists are all 'new'", () => {
    const markers = rankMarkers([1, 2], [3, 4, 5]);
    expect(markers.every((m) => m.movement === "new")).toBe(true);
  });

  it("swap marks one up and one down", () => {
    const markers = rankMarkers([1, 2], [2, 1]);
    expect(markers).toEqual([
      { videoId: 2, movement: "up", delta: 1 },
      { videoId: 1, movement: "down", delta: -1 },
    ]);
  });

  it("matches the positional-diff oracle on randomized lists", () => {
    const rand = mulberry32(99);
    for (let trial = 0; trial < 200; trial++) {
      const before = randomIds(rand, 1 + Math.floor(rand() * 12));
      const after = randomIds(rand, 1 + Math.floor(rand() * 12));
      expect(rankMarkers(before, after)).toEqual(oracle(before, after));
    }
  });
});

describe("droppedVideos", () => {
  it("reports before-only ids in order", () => {
    expect(droppedVideos([4, 1, 9, 2], [1, 2])).toEqual([4, 9]);
    expect(droppedVideos([1], [1])).toEqual([]);
  });
});
