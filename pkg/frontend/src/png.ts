// Minimal PNG decoder for the tiles the service emits: non-interlaced,
// 8- or 16-bit, grayscale or RGB(A).  Canvas drawImage would clamp the
// 16-bit score tiles to 8 bits, which would break exact client-side
// thresholding; decoding here keeps the full quantized values.

export interface RawImage {
  width: number;
  height: number;
  bitDepth: 8 | 16;
  channels: 1 | 2 | 3 | 4;
  data: Uint8Array; // unfiltered scanlines, big-endian sample order
}

const SIGNATURE = [137, 80, 78, 71, 13, 10, 26, 10];
const CHANNELS_BY_COLOR_TYPE: Record<number, 1 | 2 | 3 | 4> = {
  0: 1, // grayscale
  2: 3, // rgb
  4: 2, // gray + alpha
  6: 4, // rgba
};

async function inflate(data: Uint8Array): Promise<Uint8Array> {
  const stream = new Blob([data as BlobPart])
    .stream()
    .pipeThrough(new DecompressionStream("deflate"));
  return new Uint8Array(await new Response(stream).arrayBuffer());
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

function unfilter(raw: Uint8Array, width: number, height: number, bpp: number): Uint8Array {
  const stride = width * bpp;
  const out = new Uint8Array(stride * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const src = y * (stride + 1) + 1;
    const dst = y * stride;
    const prev = dst - stride;
    for (let x = 0; x < stride; x++) {
      const v = raw[src + x];
      const left = x >= bpp ? out[dst + x - bpp] : 0;
      const up = y > 0 ? out[prev + x] : 0;
      const upLeft = y > 0 && x >= bpp ? out[prev + x - bpp] : 0;
      let recon: number;
      switch (filter) {
        case 0:
          recon = v;
          break;
        case 1:
          recon = v + left;
          break;
        case 2:
          recon = v + up;
          break;
        case 3:
          recon = v + ((left + up) >> 1);
          break;
        case 4:
          recon = v + paeth(left, up, upLeft);
          break;
        default:
          throw new Error(`unsupported png filter ${filter}`);
      }
      out[dst + x] = recon & 0xff;
    }
  }
  return out;
}

export async function decodePng(bytes: Uint8Array): Promise<RawImage> {
  for (let i = 0; i < 8; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("not a png");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let width = 0;
  let height = 0;
  let bitDepth: 8 | 16 = 8;
  let channels: 1 | 2 | 3 | 4 = 1;
  const idat: Uint8Array[] = [];
  let offset = 8;
  while (offset < bytes.length) {
    const length = view.getUint32(offset);
    const type = String.fromCharCode(...bytes.subarray(offset + 4, offset + 8));
    const body = bytes.subarray(offset + 8, offset + 8 + length);
    if (type === "IHDR") {
      width = view.getUint32(offset + 8);
      height = view.getUint32(offset + 12);
      const depth = bytes[offset + 16];
      const colorType = bytes[offset + 17];
      const interlace = bytes[offset + 20];
      if (depth !== 8 && depth !== 16) throw new Error(`unsupported bit depth ${depth}`);
      const ch = CHANNELS_BY_COLOR_TYPE[colorType];
      if (ch === undefined) throw new Error(`unsupported color type ${colorType}`);
      if (interlace !== 0) throw new Error("interlaced png not supported");
      bitDepth = depth;
      channels = ch;
    } else if (type === "IDAT") {
      idat.push(body);
    } else if (type === "IEND") {
      break;
    }
    offset += 12 + length; // length + type + body + crc
  }
  if (width === 0 || idat.length === 0) throw new Error("png missing IHDR or IDAT");
  const joined = new Uint8Array(idat.reduce((n, c) => n + c.length, 0));
  let at = 0;
  for (const chunk of idat) {
    joined.set(chunk, at);
    at += chunk.length;
  }
  const raw = await inflate(joined);
  const bpp = channels * (bitDepth / 8);
  return { width, height, bitDepth, channels, data: unfilter(raw, width, height, bpp) };
}

export function toGray16(img: RawImage): Uint16Array {
  if (img.channels !== 1 && img.channels !== 2) {
    throw new Error("not a grayscale png");
  }
  const out = new Uint16Array(img.width * img.height);
  const step = img.channels * (img.bitDepth / 8);
  for (let i = 0; i < out.length; i++) {
    const at = i * step;
    out[i] =
      img.bitDepth === 16
        ? (img.data[at] << 8) | img.data[at + 1]
        : img.data[at] * 257;
  }
  return out;
}

export function toRgb8(img: RawImage): Uint8ClampedArray {
  const out = new Uint8ClampedArray(img.width * img.height * 3);
  const step = img.channels * (img.bitDepth / 8);
  const byteStep = img.bitDepth / 8; // take high byte of 16-bit samples
  for (let i = 0; i < img.width * img.height; i++) {
    const at = i * step;
    if (img.channels >= 3) {
      out[i * 3] = img.data[at];
      out[i * 3 + 1] = img.data[at + byteStep];
      out[i * 3 + 2] = img.data[at + 2 * byteStep];
    } else {
      const g = img.data[at];
      out[i * 3] = g;
      out[i * 3 + 1] = g;
      out[i * 3 + 2] = g;
    }
  }
  return out;
}
