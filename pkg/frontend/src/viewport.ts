// Axis and viewport math for the explorer. Mirrors the render service's
// pixel-center mapping exactly: both sides evaluate the same IEEE-754
// expression, so readouts shown here equal what the renderer trained.

export type AxisScale = "log10" | "linear";
export type AxisTarget = "eta0" | "eta1" | "eta" | "init_mean";

export interface Axis {
  target: AxisTarget;
  scale: AxisScale;
  lo: number;
  hi: number;
}

export interface ViewportRange {
  xLo: number;
  xHi: number;
  yLo: number;
  yHi: number;
}

export interface DragRect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

/** Hyperparameter value at the center of pixel `index` of `extent`. */
export function pixelToHyper(axis: Axis, index: number, extent: number): number {
  const a = axis.lo + ((index + 0.5) / extent) * (axis.hi - axis.lo);
  return axis.scale === "log10" ? Math.pow(10.0, a) : a;
}

/**
 * Axis value under a canvas position. Canvas y runs downward while the
 * y axis runs upward, so the vertical fraction is flipped.
 */
export function axisValueAtCanvas(
  viewport: ViewportRange,
  xAxis: Axis,
  yAxis: Axis,
  canvasX: number,
  canvasY: number,
  width: number,
  height: number,
  resolution: number,
): { x: number; y: number; xIndex: number; yIndex: number } {
  const clamp = (v: number, n: number) => Math.min(n - 1, Math.max(0, v));
  const xIndex = clamp(Math.floor((canvasX / width) * resolution), resolution);
  const row = clamp(Math.floor((canvasY / height) * resolution), resolution);
  const yIndex = resolution - 1 - row; // top of the canvas is the high y end
  const x = pixelToHyper({ ...xAxis, lo: viewport.xLo, hi: viewport.xHi }, xIndex, resolution);
  const y = pixelToHyper({ ...yAxis, lo: viewport.yLo, hi: viewport.yHi }, yIndex, resolution);
  return { x, y, xIndex, yIndex };
}

/**
 * New viewport from a drag rectangle in canvas pixels.
 *
 * The selection is snapped to the canvas aspect by growing the smaller
 * fractional extent to match the larger, centered on the rectangle, then
 * shifted back inside the current window if it overflows. A full-canvas
 * drag returns the current viewport unchanged (exact identity). Degenerate
 * rectangles return null.
 */
export function selectZoom(
  viewport: ViewportRange,
  rect: DragRect,
  width: number,
  height: number,
): ViewportRange | null {
  const rx0 = Math.min(rect.x0, rect.x1);
  const rx1 = Math.max(rect.x0, rect.x1);
  const ry0 = Math.min(rect.y0, rect.y1);
  const ry1 = Math.max(rect.y0, rect.y1);
  if (rx1 - rx0 <= 0 || ry1 - ry0 <= 0) return null;
  if (rx0 <= 0 && ry0 <= 0 && rx1 >= width && ry1 >= height) {
    return viewport; // identity: nothing to zoom
  }
  const fracW = (rx1 - rx0) / width;
  const fracH = (ry1 - ry0) / height;
  const frac = Math.max(fracW, fracH); // snap: cover the whole selection
  const cx = (rx0 + rx1) / 2 / width;
  const cy = (ry0 + ry1) / 2 / height;
  let fx0 = cx - frac / 2;
  let fx1 = cx + frac / 2;
  let fy0 = cy - frac / 2;
  let fy1 = cy + frac / 2;
  const shiftIn = (lo: number, hi: number): [number, number] => {
    if (lo < 0) return [0, hi - lo];
    if (hi > 1) return [lo - (hi - 1), 1];
    return [lo, hi];
  };
  [fx0, fx1] = shiftIn(fx0, fx1);
  [fy0, fy1] = shiftIn(fy0, fy1);
  const spanX = viewport.xHi - viewport.xLo;
  const spanY = viewport.yHi - viewport.yLo;
  // canvas y is flipped relative to the axis
  return {
    xLo: viewport.xLo + fx0 * spanX,
    xHi: viewport.xLo + fx1 * spanX,
    yLo: viewport.yLo + (1 - fy1) * spanY,
    yHi: viewport.yLo + (1 - fy0) * spanY,
  };
}

/** Lossless binary64 serialization: shortest round-trip decimal strings. */
export function serializeViewport(v: ViewportRange): string {
  return [v.xLo, v.xHi, v.yLo, v.yHi].map(String).join(",");
}

export function parseViewport(text: string): ViewportRange | null {
  const parts = text.split(",").map(Number);
  if (parts.length !== 4 || parts.some((p) => !Number.isFinite(p))) return null;
  const [xLo, xHi, yLo, yHi] = parts;
  if (!(xLo < xHi && yLo < yHi)) return null;
  return { xLo, xHi, yLo, yHi };
}

export function axisLabel(axis: Axis): string {
  const names: Record<AxisTarget, string> = {
    eta0: "input-layer learning rate η0",
    eta1: "readout learning rate η1",
    eta: "shared learning rate η",
    init_mean: "initialization mean",
  };
  const scale = axis.scale === "log10" ? " (log10)" : "";
  return names[axis.target] + scale;
}

export function formatReadout(value: number): string {
  return value.toPrecision(6);
}
