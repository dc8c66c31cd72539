// Tracks what the ground has assembled so far: per-cube completion and
// the union of cube footprints (the mosaic extent the view should cover).

import type { GroundEvent } from "./stream.js";
import type { Bounds } from "./view.js";

export function unionBounds(a: Bounds | null, b: Bounds): Bounds {
  if (a === null) return [...b] as Bounds;
  return [
    Math.min(a[0], b[0]),
    Math.min(a[1], b[1]),
    Math.max(a[2], b[2]),
    Math.max(a[3], b[3]),
  ];
}

export class FlightTracker {
  bounds: Bounds | null = null;
  completion = new Map<number, number>();
  growth = 0; // times the mosaic extent grew
  lineBatches = 0;

  /** Returns true when tiles must be refetched (extent changed or new data). */
  apply(event: GroundEvent): boolean {
    if (event.type === "line_batch") {
      this.lineBatches += 1;
      return false;
    }
    this.completion.set(event.cube_id, event.completion);
    if (event.bounds !== null) {
      const merged = unionBounds(this.bounds, event.bounds);
      const grew =
        this.bounds === null || merged.some((v, i) => v !== this.bounds![i]);
      this.bounds = merged;
      if (grew) this.growth += 1;
    }
    return true; // new cube content: cached tiles are out of date
  }

  completionPercent(cubeId: number): number | undefined {
    const c = this.completion.get(cubeId);
    return c === undefined ? undefined : c * 100;
  }
}
