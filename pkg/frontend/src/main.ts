/**
 * Page wiring: three-plane viewer, guided six-click annotation, segment
 * trigger, overlay display and per-round sparkline. All protocol and
 * geometry logic lives in the imported modules; this file only touches the
 * DOM.
 */

import { ApiClient, ApiError, CaseInfo, SegmentResult } from "./api.js";
import { ClickCollector } from "./clicks.js";
import { AXES, Axis, Vec3, planeShape } from "./coords.js";
import { decodeOverlay, maskSlice } from "./overlay.js";
import { Marker, composeRgba, diceSparkline } from "./viewer.js";

const api = new ApiClient("");

interface ViewerState {
  caseInfo: CaseInfo | null;
  sliceIndex: Record<Axis, number>;
  clicks: ClickCollector | null;
  overlay: Uint8Array | null;
  overlayVisible: boolean;
  rounds: SegmentResult["rounds"];
  jobAbort: AbortController | null;
  baseSlices: Partial<Record<Axis, Uint8Array>>;
}

const state: ViewerState = {
  caseInfo: null,
  sliceIndex: { x: 0, y: 0, z: 0 },
  clicks: null,
  overlay: null,
  overlayVisible: true,
  rounds: [],
  jobAbort: null,
  baseSlices: {},
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string): void {
  el<HTMLElement>("status").textContent = text;
}

function markers(): Marker[] {
  if (!state.clicks) return [];
  return Object.entries(state.clicks.collected()).map(([label, voxel]) => ({
    label,
    voxel: voxel as Vec3,
  }));
}

async function renderSlice(axis: Axis, refetch = true): Promise<void> {
  const info = state.caseInfo;
  if (!info) return;
  const index = state.sliceIndex[axis];
  if (refetch || !state.baseSlices[axis]) {
    const slice = await api.getSlice(info.id, axis, index);
    state.baseSlices[axis] = slice.data;
  }
  const base = state.baseSlices[axis]!;
  const over =
    state.overlay && state.overlayVisible
      ? maskSlice(state.overlay, info.dims, axis, index)
      : null;
  const rgba = composeRgba(base, info.dims, axis, index, over, markers());
  const [width, height] = planeShape(info.dims, axis);
  const canvas = el<HTMLCanvasElement>(`view-${axis}`);
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext("2d")!;
  ctx.putImageData(new ImageData(rgba, width, height), 0, 0);
  el<HTMLElement>(`label-${axis}`).textContent =
    `${axis} = ${index} / ${info.dims[AXES.indexOf(axis)] - 1}`;
}

function renderAll(refetch = false): void {
  for (const axis of AXES) void renderSlice(axis, refetch);
}

function updatePrompt(): void {
  const slot = state.clicks?.nextSlot();
  el<HTMLElement>("prompt").textContent = slot
    ? `click the ${slot} extreme point`
    : "all six points captured";
  el<HTMLButtonElement>("segment").disabled = !state.clicks?.isComplete();
}

async function selectCase(info: CaseInfo): Promise<void> {
  state.jobAbort?.abort();
  state.jobAbort = null;
  state.caseInfo = info;
  state.clicks = new ClickCollector(info.dims);
  state.overlay = null;
  state.rounds = [];
  state.baseSlices = {};
  for (const axis of AXES) {
    state.sliceIndex[axis] = Math.floor(info.dims[AXES.indexOf(axis)] / 2);
  }
  renderAll(true);
  updatePrompt();
  setStatus(`case ${info.id} loaded`);
}

function onViewClick(axis: Axis, event: MouseEvent): void {
  if (!state.caseInfo || !state.clicks) return;
  const canvas = event.currentTarget as HTMLCanvasElement;
  const rect = canvas.getBoundingClientRect();
  const u = Math.floor(((event.clientX - rect.left) / rect.width) * canvas.width);
  const v = Math.floor(((event.clientY - rect.top) / rect.height) * canvas.height);
  const voxel = state.clicks.capture(axis, state.sliceIndex[axis], u, v);
  if (voxel === null) return; // out of bounds or ordering violation
  renderAll();
  updatePrompt();
}

async function runAndDisplay(): Promise<void> {
  const info = state.caseInfo;
  const clicks = state.clicks;
  if (!info || !clicks?.isComplete()) return;
  try {
    const reply = await api.postPoints(info.id, clicks.toPayload().points);
    if (reply.state !== "ready") {
      setStatus("server reports the point set is incomplete");
      return;
    }
    const mode = el<HTMLSelectElement>("mode").value as "init" | "full";
    await api.startSegment(info.id, mode);
    setStatus("segmentation running…");
    state.jobAbort = new AbortController();
    const result = await api.pollResult(info.id, 1000, state.jobAbort.signal);
    if (result.status === "failed") {
      setStatus(`segmentation failed: ${result.error}`);
      return;
    }
    state.overlay = decodeOverlay(info.dims, result.overlay ?? []);
    state.rounds = result.rounds ?? [];
    const prevDice = state.rounds.map((r) => r.mean_dice_prev);
    el<HTMLElement>("sparkline").textContent = prevDice.length
      ? `rounds: ${diceSparkline(prevDice)}`
      : "";
    renderAll();
    setStatus("segmentation done");
  } catch (e) {
    if (e instanceof ApiError) {
      setStatus(`server rejected the request: ${e.message}`);
    } else if ((e as Error).name !== "AbortError") {
      setStatus(`request failed: ${(e as Error).message}`);
    }
  }
}

async function init(): Promise<void> {
  const cases = await api.listCases();
  const select = el<HTMLSelectElement>("case");
  for (const c of cases) {
    const option = document.createElement("option");
    option.value = c.id;
    option.textContent = `${c.id} (${c.dims.join("x")})`;
    select.appendChild(option);
  }
  select.addEventListener("change", () => {
    const info = cases.find((c) => c.id === select.value);
    if (info) void selectCase(info);
  });
  for (const axis of AXES) {
    el<HTMLCanvasElement>(`view-${axis}`).addEventListener("click", (e) =>
      onViewClick(axis, e as MouseEvent),
    );
    el<HTMLInputElement>(`scroll-${axis}`).addEventListener("input", (e) => {
      if (!state.caseInfo) return;
      const extent = state.caseInfo.dims[AXES.indexOf(axis)];
      const frac = Number((e.target as HTMLInputElement).value) / 100;
      state.sliceIndex[axis] = Math.min(extent - 1, Math.floor(frac * extent));
      void renderSlice(axis, true); // one view updates; the others keep their slice
    });
  }
  el<HTMLButtonElement>("undo").addEventListener("click", () => {
    state.clicks?.undo();
    renderAll();
    updatePrompt();
  });
  el<HTMLInputElement>("overlay-toggle").addEventListener("change", (e) => {
    state.overlayVisible = (e.target as HTMLInputElement).checked;
    renderAll(); // redraw from cached base slices, no refetch
  });
  el<HTMLButtonElement>("segment").addEventListener("click", () => {
    void runAndDisplay();
  });
  if (cases.length) {
    select.value = cases[0].id;
    await selectCase(cases[0]);
  } else {
    setStatus("no cases available");
  }
}

window.addEventListener("DOMContentLoaded", () => {
  void init();
});
