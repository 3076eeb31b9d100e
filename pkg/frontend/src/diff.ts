// Positional rank diff between two result lists, used by the side-by-side
// compare view to mark how each video moved when c changed.

export type RankMovement = "same" | "up" | "down" | "new";

export interface RankMarker {
  videoId: number;
  movement: RankMovement;
  delta: number; // positions gained (positive = moved up), 0 for new/same
}

export function rankMarkers(
  before: number[],
  after: number[],
): RankMarker[] {
  const position = new Map<number, number>();
  before.forEach((videoId, i) => position.set(videoId, i));
  return after.map((videoId, i) => {
    const prev = position.get(videoId);
    if (prev === undefined) {
      return { videoId, movement: "new" as const, delta: 0 };
    }
    const delta = prev - i;
    const movement = delta > 0 ? "up" : delta < 0 ? "down" : "same";
    return { videoId, movement, delta };
  });
}

export function droppedVideos(before: number[], after: number[]): number[] {
  const kept = new Set(after);
  return before.filter((videoId) => !kept.has(videoId));
}
