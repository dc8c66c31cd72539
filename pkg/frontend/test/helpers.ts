import { readFile } from "node:fs/promises";
import { fileURLToPath } from "node:url";
import { decodePng, toGray16, toRgb8, type RawImage } from "../src/png.js";
import type { EventSourceLike } from "../src/stream.js";

export async function fixtureBytes(name: string): Promise<Uint8Array> {
  const path = fileURLToPath(new URL(`./fixtures/${name}`, import.meta.url));
  return new Uint8Array(await readFile(path));
}

export async function fixturePng(name: string): Promise<RawImage> {
  return decodePng(await fixtureBytes(name));
}

export async function fixtureMeta(): Promise<any> {
  const path = fileURLToPath(new URL("./fixtures/meta.json", import.meta.url));
  return JSON.parse(await readFile(path, "utf8"));
}

export { toGray16, toRgb8 };

export class FakeEventSource implements EventSourceLike {
  static instances: FakeEventSource[] = [];
  onmessage: ((e: { data: string }) => void) | null = null;
  onerror: (() => void) | null = null;
  closed = false;

  constructor(public url: string) {
    FakeEventSource.instances.push(this);
  }

  emit(event: unknown): void {
    this.onmessage?.({ data: JSON.stringify(event) });
  }

  fail(): void {
    this.onerror?.();
  }

  close(): void {
    this.closed = true;
  }

  static reset(): void {
    FakeEventSource.instances = [];
  }

  static latest(): FakeEventSource {
    return FakeEventSource.instances[FakeEventSource.instances.length - 1];
  }
}
