// Explorer state: current view, zoom history, URL-fragment persistence.
// Viewports are kept as exact binary64 values; history stores their
// shortest round-trip string form, so back-navigation restores bits.

import {
  Axis,
  ViewportRange,
  parseViewport,
  serializeViewport,
} from "./viewport.js";

export interface ConditionInfo {
  id: string;
  label: string;
  steps: number;
  x_axis: Axis;
  y_axis: Axis;
}

export interface ExplorerState {
  conditionId: string;
  viewport: ViewportRange;
  resolution: number;
  steps: number;
  seed: number;
  history: string[]; // serialized viewports, oldest first
  dimension: number | null;
}

export function defaultViewport(condition: ConditionInfo): ViewportRange {
  return {
    xLo: condition.x_axis.lo,
    xHi: condition.x_axis.hi,
    yLo: condition.y_axis.lo,
    yHi: condition.y_axis.hi,
  };
}

export function initialState(condition: ConditionInfo): ExplorerState {
  return {
    conditionId: condition.id,
    viewport: defaultViewport(condition),
    resolution: 256,
    steps: condition.steps,
    seed: 0,
    history: [],
    dimension: null,
  };
}

/** Push the current viewport and move to a new one. */
export function pushZoom(state: ExplorerState, next: ViewportRange): ExplorerState {
  return {
    ...state,
    history: [...state.history, serializeViewport(state.viewport)],
    viewport: next,
  };
}

/** Pop the previous viewport; no-op when the history is empty. */
export function popZoom(state: ExplorerState): ExplorerState {
  if (state.history.length === 0) return state;
  const previous = parseViewport(state.history[state.history.length - 1]);
  if (previous === null) return state;
  return {
    ...state,
    history: state.history.slice(0, -1),
    viewport: previous,
  };
}

/** Changing any control resets history to the preset's default window. */
export function applyCondition(state: ExplorerState,
                               condition: ConditionInfo): ExplorerState {
  return {
    ...state,
    conditionId: condition.id,
    viewport: defaultViewport(condition),
    steps: condition.steps,
    history: [],
    dimension: null,
  };
}

export function resetView(state: ExplorerState,
                          condition: ConditionInfo): ExplorerState {
  return { ...state, viewport: defaultViewport(condition), history: [] };
}

// --- URL fragment ------------------------------------------------------

export function stateToFragment(state: ExplorerState): string {
  const params = new URLSearchParams({
    c: state.conditionId,
    seed: String(state.seed),
    steps: String(state.steps),
    res: String(state.resolution),
    vp: serializeViewport(state.viewport),
  });
  return params.toString();
}

export function fragmentToState(
  fragment: string,
  conditions: ConditionInfo[],
): ExplorerState | null {
  const params = new URLSearchParams(fragment.replace(/^#/, ""));
  const conditionId = params.get("c");
  const condition = conditions.find((cond) => cond.id === conditionId);
  if (!condition) return null;
  const viewport = parseViewport(params.get("vp") ?? "");
  const state = initialState(condition);
  if (viewport) state.viewport = viewport;
  const seed = Number(params.get("seed"));
  if (Number.isInteger(seed) && seed >= 0) state.seed = seed;
  const steps = Number(params.get("steps"));
  if (Number.isInteger(steps) && steps > 0) state.steps = steps;
  const res = Number(params.get("res"));
  if (Number.isInteger(res) && res >= 16 && res <= 4096) state.resolution = res;
  return state;
}
