import type { Bounds } from "./view.js";

export interface FlightInfo {
  cubes: number;
  completion: number[];
  bounds: Bounds | null;
  gsd: number | null;
}

export async function fetchFlight(base: string): Promise<FlightInfo> {
  const res = await fetch(`${base}/api/flight`);
  if (!res.ok) throw new Error(`flight fetch failed: ${res.status}`);
  return (await res.json()) as FlightInfo;
}
