// Browser shell: wires the canvas, controls, tile cache, and event stream
// together.  All rendering math lives in the pure modules; this file only
// touches the DOM.

import { fetchFlight } from "./api.js";
import { FlightTracker } from "./mosaic.js";
import { renderRgb, renderScore, renderThreshold } from "./render.js";
import { followStream } from "./stream.js";
import { httpTileFetcher, TileCache, type TilePair } from "./tiles.js";
import {
  bboxFor,
  defaultView,
  fitBounds,
  pan,
  setMode,
  setThreshold,
  zoomAbout,
  type Mode,
  type ViewState,
} from "./view.js";

const base = "";
const canvas = document.getElementById("map") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const staleBanner = document.getElementById("stale") as HTMLDivElement;
const completionList = document.getElementById("completion") as HTMLDivElement;
const thresholdSlider = document.getElementById("threshold") as HTMLInputElement;
const thresholdValue = document.getElementById("threshold-value") as HTMLSpanElement;

let view: ViewState = defaultView();
let tiles: TilePair | null = null;
let renderQueued = false;
let fetchQueued: number | null = null;

const cache = new TileCache(httpTileFetcher(base));
const tracker = new FlightTracker();

function canvasSize(): [number, number] {
  return [canvas.width, canvas.height];
}

function resize() {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  scheduleFetch();
}

function scheduleRender() {
  if (renderQueued) return;
  renderQueued = true;
  requestAnimationFrame(() => {
    renderQueued = false;
    draw();
  });
}

function draw() {
  const [w, h] = canvasSize();
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, w, h);
  if (tiles === null) return;
  let pixels: Uint8ClampedArray<ArrayBuffer>;
  if (view.mode === "rgb") {
    pixels = renderRgb(tiles.rgb);
  } else if (view.mode === "score") {
    pixels = renderScore(tiles.score, view.stretch);
  } else {
    pixels = renderThreshold(tiles.score, view.threshold);
  }
  ctx.putImageData(new ImageData(pixels, tiles.score.width, tiles.score.height), 0, 0);
}

// fetch the viewport-sized tile pair after interactions settle
function scheduleFetch(delayMs = 120) {
  if (fetchQueued !== null) clearTimeout(fetchQueued);
  fetchQueued = setTimeout(async () => {
    fetchQueued = null;
    const [w, h] = canvasSize();
    if (w === 0 || h === 0) return;
    try {
      tiles = await cache.ensure(bboxFor(view, w, h), w, h);
      scheduleRender();
    } catch {
      // gray placeholder and retry
      ctx.fillStyle = "#444";
      ctx.fillRect(0, 0, w, h);
      scheduleFetch(1000);
    }
  }, delayMs) as unknown as number;
}

function setView(next: ViewState, needsFetch: boolean) {
  view = next;
  if (needsFetch) scheduleFetch();
  scheduleRender();
}

function updateCompletion() {
  const rows: string[] = [];
  for (const [cubeId, completion] of [...tracker.completion.entries()].sort(
    (a, b) => a[0] - b[0],
  )) {
    rows.push(`cube ${cubeId}: ${(completion * 100).toFixed(1)}%`);
  }
  completionList.textContent = rows.join("\n");
}

// -- controls ---------------------------------------------------------------

for (const mode of ["rgb", "score", "threshold"] as Mode[]) {
  document.getElementById(`mode-${mode}`)!.addEventListener("click", () => {
    // mode changes re-render from cached tiles; no request
    setView(setMode(view, mode), false);
    document
      .querySelectorAll(".mode-button")
      .forEach((b) => b.classList.toggle("active", b.id === `mode-${mode}`));
  });
}

thresholdSlider.addEventListener("input", () => {
  // client-side thresholding over the cached 16-bit tile: instant
  setView(setThreshold(view, Number(thresholdSlider.value)), false);
  thresholdValue.textContent = view.threshold.toFixed(3);
});

let dragging: { x: number; y: number } | null = null;
canvas.addEventListener("pointerdown", (e) => {
  dragging = { x: e.clientX, y: e.clientY };
  canvas.setPointerCapture(e.pointerId);
});
canvas.addEventListener("pointermove", (e) => {
  if (!dragging) return;
  setView(pan(view, e.clientX - dragging.x, e.clientY - dragging.y), true);
  dragging = { x: e.clientX, y: e.clientY };
});
canvas.addEventListener("pointerup", () => {
  dragging = null;
});
canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  const [w, h] = canvasSize();
  const factor = e.deltaY > 0 ? 1.25 : 0.8;
  setView(zoomAbout(view, w, h, e.offsetX, e.offsetY, factor), true);
});

// -- live updates -------------------------------------------------------------

followStream(`${base}/api/events`, {
  onEvent(event) {
    const needsFetch = tracker.apply(event);
    updateCompletion();
    if (needsFetch) {
      cache.invalidate();
      if (tracker.bounds !== null && tracker.completion.size <= 1) {
        const [w, h] = canvasSize();
        view = fitBounds(view, tracker.bounds, w, h);
      }
      scheduleFetch();
    }
  },
  onStale(stale) {
    staleBanner.style.display = stale ? "block" : "none";
  },
});

// -- startup ------------------------------------------------------------------

window.addEventListener("resize", resize);
resize();
fetchFlight(base)
  .then((flight) => {
    flight.completion.forEach((c, i) => tracker.completion.set(i, c));
    updateCompletion();
    if (flight.bounds !== null) {
      const [w, h] = canvasSize();
      view = fitBounds(view, flight.bounds, w, h);
      tracker.bounds = flight.bounds;
    }
    scheduleFetch(0);
  })
  .catch(() => scheduleFetch(1000));
thresholdSlider.value = String(view.threshold);
thresholdValue.textContent = view.threshold.toFixed(3);
