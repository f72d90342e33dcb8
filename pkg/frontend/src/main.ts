// DOM wiring for the explorer. All viewport/state math lives in the pure
// modules; this file only moves values between them and the page.

import { RenderClient } from "./api.js";
import {
  ConditionInfo,
  ExplorerState,
  applyCondition,
  fragmentToState,
  initialState,
  popZoom,
  pushZoom,
  resetView,
  stateToFragment,
} from "./state.js";
import {
  axisLabel,
  axisValueAtCanvas,
  formatReadout,
  selectZoom,
} from "./viewport.js";

const PREVIEW_RESOLUTION = 128;

const baseUrl = (window as { TRAINFRACTAL_API?: string }).TRAINFRACTAL_API
  ?? `${location.protocol}//${location.hostname}:8000`;
const client = new RenderClient(baseUrl);

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const overlay = document.getElementById("overlay") as HTMLCanvasElement;
const overlayCtx = overlay.getContext("2d")!;
const conditionSelect = document.getElementById("condition") as HTMLSelectElement;
const stepsSelect = document.getElementById("steps") as HTMLSelectElement;
const resolutionSelect = document.getElementById("resolution") as HTMLSelectElement;
const seedInput = document.getElementById("seed") as HTMLInputElement;
const backButton = document.getElementById("back") as HTMLButtonElement;
const resetButton = document.getElementById("reset") as HTMLButtonElement;
const readout = document.getElementById("readout")!;
const dimensionLabel = document.getElementById("dimension")!;
const statusLabel = document.getElementById("status")!;
const xAxisLabel = document.getElementById("x-label")!;
const yAxisLabel = document.getElementById("y-label")!;

let conditions: ConditionInfo[] = [];
let state: ExplorerState;
let drag: { x0: number; y0: number } | null = null;

function condition(): ConditionInfo {
  return conditions.find((c) => c.id === state.conditionId) ?? conditions[0];
}

function setStatus(text: string, isError = false) {
  statusLabel.textContent = text;
  statusLabel.className = isError ? "error" : "";
}

function syncFragment() {
  history.replaceState(null, "", `#${stateToFragment(state)}`);
}

function relabelAxes() {
  const cond = condition();
  xAxisLabel.textContent = axisLabel(cond.x_axis);
  yAxisLabel.textContent = axisLabel(cond.y_axis);
}

async function renderView() {
  syncFragment();
  relabelAxes();
  backButton.disabled = state.history.length === 0;
  const base = {
    conditionId: state.conditionId,
    seed: state.seed,
    steps: state.steps,
    viewport: state.viewport,
  };
  // progressive refinement: coarse preview first, full resolution after;
  // sequence numbers drop whichever arrives stale
  const previewSeq = client.nextSequence();
  const fullSeq = client.nextSequence();
  const preview = client
    .render({ ...base, width: PREVIEW_RESOLUTION, height: PREVIEW_RESOLUTION })
    .then((result) => {
      if (client.shouldApply(previewSeq)) drawImage(result.imageUrl);
    })
    .catch(() => undefined);
  setStatus("rendering…");
  try {
    const result = await client.render(
      { ...base, width: state.resolution, height: state.resolution },
      (fraction) => setStatus(`rendering… ${(fraction * 100).toFixed(0)}%`),
    );
    await preview;
    if (client.shouldApply(fullSeq)) {
      drawImage(result.imageUrl);
      state.dimension = result.dimension;
      dimensionLabel.textContent = result.dimension === null
        ? "dimension: n/a"
        : `dimension: ${result.dimension.toFixed(3)}`;
      setStatus("done");
    }
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    setStatus(`render failed: ${message} (click to retry)`, true);
    statusLabel.onclick = () => {
      statusLabel.onclick = null;
      void renderView();
    };
  }
}

function drawImage(url: string) {
  const img = new Image();
  img.onload = () => {
    ctx.imageSmoothingEnabled = false;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.drawImage(img, 0, 0, canvas.width, canvas.height);
  };
  img.src = url;
}

function canvasPos(event: MouseEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((event.clientX - rect.left) / rect.width) * canvas.width,
    y: ((event.clientY - rect.top) / rect.height) * canvas.height,
  };
}

overlay.addEventListener("mousedown", (event) => {
  const pos = canvasPos(event);
  drag = { x0: pos.x, y0: pos.y };
});

overlay.addEventListener("mousemove", (event) => {
  const pos = canvasPos(event);
  const cond = condition();
  const values = axisValueAtCanvas(
    state.viewport, cond.x_axis, cond.y_axis,
    pos.x, pos.y, canvas.width, canvas.height, state.resolution);
  readout.textContent =
    `x = ${formatReadout(values.x)}   y = ${formatReadout(values.y)}`;
  overlayCtx.clearRect(0, 0, overlay.width, overlay.height);
  if (drag) {
    overlayCtx.strokeStyle = "#1a33d9";
    overlayCtx.lineWidth = 1.5;
    overlayCtx.strokeRect(drag.x0, drag.y0, pos.x - drag.x0, pos.y - drag.y0);
  }
});

overlay.addEventListener("mouseup", (event) => {
  if (!drag) return;
  const pos = canvasPos(event);
  const rect = { x0: drag.x0, y0: drag.y0, x1: pos.x, y1: pos.y };
  drag = null;
  overlayCtx.clearRect(0, 0, overlay.width, overlay.height);
  const next = selectZoom(state.viewport, rect, canvas.width, canvas.height);
  if (next === null || next === state.viewport) return; // degenerate/identity
  state = pushZoom(state, next);
  void renderView();
});

overlay.addEventListener("mouseleave", () => {
  drag = null;
  overlayCtx.clearRect(0, 0, overlay.width, overlay.height);
});

backButton.addEventListener("click", () => {
  const prior = state;
  state = popZoom(state);
  if (state !== prior) void renderView();
});

resetButton.addEventListener("click", () => {
  state = resetView(state, condition());
  void renderView();
});

conditionSelect.addEventListener("change", () => {
  const next = conditions.find((c) => c.id === conditionSelect.value);
  if (next) {
    state = applyCondition(state, next);
    stepsSelect.value = String(next.steps);
    void renderView();
  }
});

// changing any parameter control returns to the preset's default window
// with a cleared history
stepsSelect.addEventListener("change", () => {
  state = resetView({ ...state, steps: Number(stepsSelect.value) }, condition());
  void renderView();
});

resolutionSelect.addEventListener("change", () => {
  state = resetView({ ...state, resolution: Number(resolutionSelect.value) },
                    condition());
  void renderView();
});

seedInput.addEventListener("change", () => {
  const seed = Number(seedInput.value);
  if (Number.isInteger(seed) && seed >= 0) {
    state = resetView({ ...state, seed }, condition());
    void renderView();
  }
});

async function start() {
  setStatus("loading conditions…");
  try {
    conditions = await client.conditions();
  } catch (err) {
    setStatus(`service unreachable at ${baseUrl} (click to retry)`, true);
    statusLabel.onclick = () => {
      statusLabel.onclick = null;
      void start();
    };
    return;
  }
  for (const cond of conditions) {
    const option = document.createElement("option");
    option.value = cond.id;
    option.textContent = cond.label;
    conditionSelect.appendChild(option);
  }
  state = fragmentToState(location.hash, conditions) ?? initialState(conditions[0]);
  conditionSelect.value = state.conditionId;
  stepsSelect.value = String(state.steps);
  resolutionSelect.value = String(state.resolution);
  seedInput.value = String(state.seed);
  void renderView();
}

void start();
