import { describe, expect, it } from "vitest";
import { toGray16, toRgb8 } from "../src/png.js";
import { fixtureMeta, fixturePng } from "./helpers.js";

describe("png decoder", () => {
  it("decodes the 16-bit grayscale pattern exactly", async () => {
    const meta = await fixtureMeta();
    const img = await fixturePng("gray16_pattern.png");
    expect(img.width).toBe(meta.gray16_pattern.width);
    expect(img.height).toBe(meta.gray16_pattern.height);
    expect(img.bitDepth).toBe(16);
    const values = toGray16(img);
    const mult = BigInt(meta.gray16_pattern.multiplier);
    for (let i = 0; i < values.length; i++) {
      const expected = Number((BigInt(i) * mult) % 65536n);
      expect(values[i]).toBe(expected);
    }
  });

  it("decodes the 8-bit rgb pattern exactly", async () => {
    const meta = await fixtureMeta();
    const img = await fixturePng("rgb8_pattern.png");
    expect(img.channels).toBe(3);
    const values = toRgb8(img);
    const [mr, mg, mb] = meta.rgb8_pattern.multipliers;
    for (let i = 0; i < img.width * img.height; i++) {
      expect(values[i * 3]).toBe((i * mr) % 256);
      expect(values[i * 3 + 1]).toBe((i * mg) % 256);
      expect(values[i * 3 + 2]).toBe((i * mb) % 256);
    }
  });

  it("decodes the real score tile with full 16-bit range", async () => {
    const meta = await fixtureMeta();
    const img = await fixturePng("score_tile.png");
    expect([img.width, img.height]).toEqual([meta.tile_width, meta.tile_height]);
    const values = toGray16(img);
    const max = values.reduce((a, b) => Math.max(a, b), 0);
    expect(max).toBeGreaterThan(255); // information an 8-bit canvas would lose
  });

  it("rejects non-png bytes", async () => {
    const { decodePng } = await import("../src/png.js");
    await expect(decodePng(new Uint8Array([1, 2, 3, 4, 5, 6, 7, 8]))).rejects.toThrow(
      /not a png/,
    );
  });
});
