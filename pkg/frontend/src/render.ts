// Pure tile-to-pixels rendering.  All three modes derive from the cached
// tiles alone, so mode and threshold changes never touch the network.

export interface ScoreTile {
  width: number;
  height: number;
  values: Uint16Array; // normalized sqrt-score quantized to 0..65535
}

export interface RgbTile {
  width: number;
  height: number;
  values: Uint8ClampedArray; // w*h*3
}

export const SCORE_TILE_MAX = 65535;

// Shared definition with the ground tooling: anomalous iff the quantized
// value, mapped back to [0, 1], strictly exceeds the threshold.
export function thresholdMask(tile: ScoreTile, threshold: number): Uint8Array {
  const out = new Uint8Array(tile.values.length);
  for (let i = 0; i < tile.values.length; i++) {
    out[i] = tile.values[i] / SCORE_TILE_MAX > threshold ? 1 : 0;
  }
  return out;
}

export function renderRgb(tile: RgbTile): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(new ArrayBuffer(tile.width * tile.height * 4));
  for (let i = 0; i < tile.width * tile.height; i++) {
    out[i * 4] = tile.values[i * 3];
    out[i * 4 + 1] = tile.values[i * 3 + 1];
    out[i * 4 + 2] = tile.values[i * 3 + 2];
    out[i * 4 + 3] = 255; // missing data arrives as black already
  }
  return out;
}

// Score display: stretch then clip, darker = more anomalous.
export function renderScore(tile: ScoreTile, stretch: number): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(new ArrayBuffer(tile.width * tile.height * 4));
  for (let i = 0; i < tile.values.length; i++) {
    const v = Math.min(1, (tile.values[i] / SCORE_TILE_MAX) * stretch);
    const g = Math.round(255 * (1 - v));
    out[i * 4] = g;
    out[i * 4 + 1] = g;
    out[i * 4 + 2] = g;
    out[i * 4 + 3] = 255;
  }
  return out;
}

// Threshold display: anomalous pixels black on a white field.
export function renderThreshold(tile: ScoreTile, threshold: number): Uint8ClampedArray<ArrayBuffer> {
  const mask = thresholdMask(tile, threshold);
  const out = new Uint8ClampedArray(new ArrayBuffer(tile.width * tile.height * 4));
  for (let i = 0; i < mask.length; i++) {
    const g = mask[i] ? 0 : 255;
    out[i * 4] = g;
    out[i * 4 + 1] = g;
    out[i * 4 + 2] = g;
    out[i * 4 + 3] = 255;
  }
  return out;
}
