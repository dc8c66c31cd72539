// View state and the world/screen coordinate algebra.  World coordinates
// are local east/north meters; screen y grows downward.

export type Mode = "rgb" | "score" | "threshold";
export type Bounds = [number, number, number, number]; // e0, n0, e1, n1

export interface ViewState {
  centerEast: number;
  centerNorth: number;
  metersPerPixel: number;
  mode: Mode;
  threshold: number;
  stretch: number;
}

export const DEFAULT_THRESHOLD = 0.11;
export const DEFAULT_STRETCH = 3;

export function defaultView(): ViewState {
  return {
    centerEast: 0,
    centerNorth: 0,
    metersPerPixel: 0.1,
    mode: "rgb",
    threshold: DEFAULT_THRESHOLD,
    stretch: DEFAULT_STRETCH,
  };
}

export function screenToWorld(
  view: ViewState,
  widthPx: number,
  heightPx: number,
  sx: number,
  sy: number,
): { east: number; north: number } {
  return {
    east: view.centerEast + (sx - widthPx / 2) * view.metersPerPixel,
    north: view.centerNorth - (sy - heightPx / 2) * view.metersPerPixel,
  };
}

export function bboxFor(view: ViewState, widthPx: number, heightPx: number): Bounds {
  const halfW = (widthPx / 2) * view.metersPerPixel;
  const halfH = (heightPx / 2) * view.metersPerPixel;
  return [
    view.centerEast - halfW,
    view.centerNorth - halfH,
    view.centerEast + halfW,
    view.centerNorth + halfH,
  ];
}

export function pan(view: ViewState, dxPx: number, dyPx: number): ViewState {
  return {
    ...view,
    centerEast: view.centerEast - dxPx * view.metersPerPixel,
    centerNorth: view.centerNorth + dyPx * view.metersPerPixel,
  };
}

export function zoomAbout(
  view: ViewState,
  widthPx: number,
  heightPx: number,
  sx: number,
  sy: number,
  factor: number,
): ViewState {
  // the world point under the cursor must stay under the cursor
  const anchor = screenToWorld(view, widthPx, heightPx, sx, sy);
  const metersPerPixel = view.metersPerPixel * factor;
  return {
    ...view,
    metersPerPixel,
    centerEast: anchor.east - (sx - widthPx / 2) * metersPerPixel,
    centerNorth: anchor.north + (sy - heightPx / 2) * metersPerPixel,
  };
}

export function setMode(view: ViewState, mode: Mode): ViewState {
  return { ...view, mode };
}

export function setThreshold(view: ViewState, threshold: number): ViewState {
  return { ...view, threshold: Math.min(1, Math.max(0, threshold)) };
}

export function fitBounds(
  view: ViewState,
  bounds: Bounds,
  widthPx: number,
  heightPx: number,
  marginFrac = 0.05,
): ViewState {
  const [e0, n0, e1, n1] = bounds;
  const spanE = Math.max(e1 - e0, 1e-9);
  const spanN = Math.max(n1 - n0, 1e-9);
  const metersPerPixel =
    Math.max(spanE / widthPx, spanN / heightPx) * (1 + marginFrac);
  return {
    ...view,
    centerEast: (e0 + e1) / 2,
    centerNorth: (n0 + n1) / 2,
    metersPerPixel,
  };
}
