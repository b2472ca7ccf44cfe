import type { LatentCode } from "./api.js";

export type RenderMode = "shaded" | "band-split";
export type Band = "low" | "high";

// Latent component sliders span a few standard deviations of the
// training codes; values outside are clamped, never sent.
export const COMPONENT_MIN = -4;
export const COMPONENT_MAX = 4;

export interface EditorState {
  dLow: number;
  dHigh: number;
  current: LatentCode;
  subjectA: LatentCode | null;
  subjectB: LatentCode | null;
  alpha: number;
  beta: number;
  gamma: number;
  mode: RenderMode;
}

function zeros(n: number): number[] {
  return new Array<number>(n).fill(0);
}

export function createEditorState(dLow: number, dHigh: number, gamma: number): EditorState {
  return {
    dLow,
    dHigh,
    current: { z_low: zeros(dLow), z_high: zeros(dHigh) },
    subjectA: null,
    subjectB: null,
    alpha: 0,
    beta: 0,
    gamma: clamp01(Number.isFinite(gamma) ? gamma : 1),
    mode: "shaded",
  };
}

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}

function clamp01(value: number): number {
  return clamp(value, 0, 1);
}

export function cloneCode(code: LatentCode): LatentCode {
  return { z_low: [...code.z_low], z_high: [...code.z_high] };
}

/** Set one latent component, clamped to the slider range.
 *  Returns false (state untouched) for non-finite input or a bad index. */
export function setComponent(
  state: EditorState,
  band: Band,
  index: number,
  value: number,
): boolean {
  if (!Number.isFinite(value) || !Number.isInteger(index)) return false;
  const target = band === "low" ? state.current.z_low : state.current.z_high;
  if (index < 0 || index >= target.length) return false;
  target[index] = clamp(value, COMPONENT_MIN, COMPONENT_MAX);
  return true;
}

export function setBlend(
  state: EditorState,
  which: "alpha" | "beta" | "gamma",
  value: number,
): boolean {
  if (!Number.isFinite(value)) return false;
  state[which] = clamp01(value);
  return true;
}

export function loadSubject(state: EditorState, slot: "A" | "B", code: LatentCode): void {
  const copy = cloneCode(code);
  if (slot === "A") state.subjectA = copy;
  else state.subjectB = copy;
}

/** beta blends the low band, alpha the high band. */
export function lerpCodes(
  a: LatentCode,
  b: LatentCode,
  alpha: number,
  beta: number,
): LatentCode {
  return {
    z_low: a.z_low.map((v, i) => (1 - beta) * v + beta * b.z_low[i]),
    z_high: a.z_high.map((v, i) => (1 - alpha) * v + alpha * b.z_high[i]),
  };
}

/** Recompute the current code from the interpolation pad.
 *  Needs both endpoint subjects; no-op otherwise. */
export function applyPad(state: EditorState): boolean {
  if (!state.subjectA || !state.subjectB) return false;
  state.current = lerpCodes(state.subjectA, state.subjectB, state.alpha, state.beta);
  return true;
}

/** Band-isolated codes for the split view: each pane decodes the current
 *  code with the other band zeroed, so at gamma 0 a pane only responds
 *  to its own band's edits. */
export function bandRequests(state: EditorState): { low: LatentCode; high: LatentCode } {
  return {
    low: { z_low: [...state.current.z_low], z_high: zeros(state.dHigh) },
    high: { z_low: zeros(state.dLow), z_high: [...state.current.z_high] },
  };
}
