// Tile fetching and caching.  One viewport-sized request per mode per
// view; everything display-side (mode switches, threshold moves) renders
// from the cache without another request.

import { decodePng, toGray16, toRgb8 } from "./png.js";
import type { RgbTile, ScoreTile } from "./render.js";
import type { Bounds } from "./view.js";

export type TileMode = "rgb" | "score";

export interface FetchTile {
  (mode: TileMode, bbox: Bounds, w: number, h: number): Promise<Uint8Array>;
}

export function httpTileFetcher(base: string): FetchTile {
  return async (mode, bbox, w, h) => {
    const url =
      `${base}/api/tile?mode=${mode}&bbox=${bbox.join(",")}&w=${w}&h=${h}`;
    const res = await fetch(url);
    if (!res.ok) throw new Error(`tile fetch failed: ${res.status}`);
    return new Uint8Array(await res.arrayBuffer());
  };
}

export interface TilePair {
  score: ScoreTile;
  rgb: RgbTile;
}

function keyOf(bbox: Bounds, w: number, h: number): string {
  return bbox.map((v) => v.toFixed(3)).join(",") + `@${w}x${h}`;
}

export class TileCache {
  fetchCount = 0;
  private entries = new Map<string, TilePair>();

  constructor(private readonly fetchTile: FetchTile) {}

  has(bbox: Bounds, w: number, h: number): boolean {
    return this.entries.has(keyOf(bbox, w, h));
  }

  async ensure(bbox: Bounds, w: number, h: number): Promise<TilePair> {
    const key = keyOf(bbox, w, h);
    const hit = this.entries.get(key);
    if (hit) return hit;
    const [scoreBytes, rgbBytes] = await Promise.all([
      this.fetchTile("score", bbox, w, h),
      this.fetchTile("rgb", bbox, w, h),
    ]);
    this.fetchCount += 2;
    const scoreImg = await decodePng(scoreBytes);
    const rgbImg = await decodePng(rgbBytes);
    const pair: TilePair = {
      score: { width: scoreImg.width, height: scoreImg.height, values: toGray16(scoreImg) },
      rgb: { width: rgbImg.width, height: rgbImg.height, values: toRgb8(rgbImg) },
    };
    this.entries.set(key, pair);
    return pair;
  }

  invalidate(): void {
    this.entries.clear();
  }
}
