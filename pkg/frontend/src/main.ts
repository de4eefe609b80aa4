import { getExamples, getJob, submitJob, uploadInput, ApiError } from "./api.js";
import {
  ExampleTile,
  GalleryState,
  clearError,
  controlsLocked,
  exportKeepers,
  failed,
  filterCounts,
  importHighlights,
  initialState,
  isTerminal,
  jobSubmitted,
  pollDelayMs,
  pollUpdate,
  setFilter,
  startUpload,
  examplesLoaded,
  toggleKeeper,
  uploadDone,
  visibleExamples,
} from "./state.js";

const BASE = "";

let state = initialState();
let pollTimer: number | null = null;
let selectedFile: File | null = null;

function set(next: GalleryState): void {
  state = next;
  render();
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function stopPolling(): void {
  if (pollTimer !== null) {
    window.clearTimeout(pollTimer);
    pollTimer = null;
  }
}

async function pollJob(jobId: string, attempt: number): Promise<void> {
  try {
    const job = await getJob(BASE, jobId);
    if (state.jobId !== jobId) return; // superseded by a re-run
    set(pollUpdate(state, job.state));
    if (!isTerminal(job.state)) {
      pollTimer = window.setTimeout(() => pollJob(jobId, attempt + 1), pollDelayMs(attempt));
      return;
    }
    if (job.state === "done") {
      const { manifest, urls } = await getExamples(BASE, jobId);
      const tiles: ExampleTile[] = manifest.examples.map((e, i) => ({
        id: e.id,
        url: urls[i],
        provenance: e.provenance,
        granularity: e.granularity ?? null,
        slotRange: e.slot_range ?? null,
        jobId,
      }));
      set(examplesLoaded(state, tiles));
    } else {
      set(failed(state, job.error || "job failed"));
    }
  } catch (err) {
    set(failed(state, err instanceof Error ? err.message : String(err)));
  }
}

async function runJob(): Promise<void> {
  if (!state.inputId || controlsLocked(state)) return;
  stopPolling();
  const { condition, granularity, k } = state.controls;
  const request =
    condition !== null
      ? { condition }
      : { params: { granularity, k, targets_mode: "random" } };
  try {
    const jobId = await submitJob(BASE, state.inputId, request);
    set(jobSubmitted(state, jobId));
    pollTimer = window.setTimeout(() => pollJob(jobId, 1), pollDelayMs(0));
  } catch (err) {
    set(failed(state, err instanceof ApiError ? `submit failed: ${err.message}` : "service unreachable"));
  }
}

async function onFileChosen(file: File): Promise<void> {
  selectedFile = file;
  const thumb = URL.createObjectURL(file);
  set(startUpload(state, thumb));
  try {
    const inputId = await uploadInput(BASE, file);
    set(uploadDone(state, inputId));
  } catch (err) {
    set(failed(state, err instanceof ApiError ? `upload rejected: ${err.message}` : "service unreachable"));
  }
}

function downloadManifest(): void {
  const manifest = exportKeepers(state);
  const blob = new Blob([JSON.stringify(manifest, null, 2)], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "keepers.json";
  a.click();
  URL.revokeObjectURL(a.href);
}

function render(): void {
  const locked = controlsLocked(state);
  el<HTMLInputElement>("file-input").disabled = locked;
  el<HTMLSelectElement>("condition").disabled = locked;
  el<HTMLSelectElement>("granularity").disabled = locked;
  el<HTMLInputElement>("k-input").disabled = locked;
  el<HTMLButtonElement>("run").disabled = locked || !state.inputId;
  el<HTMLButtonElement>("export").disabled = state.keepers.size === 0;

  const banner = el<HTMLDivElement>("banner");
  banner.hidden = state.error === null;
  el<HTMLSpanElement>("banner-text").textContent = state.error ?? "";

  const status = el<HTMLSpanElement>("status");
  if (state.phase === "polling") status.textContent = `job ${state.jobState}…`;
  else if (state.phase === "uploading") status.textContent = "uploading…";
  else if (state.examples.length) status.textContent = `${state.examples.length} examples`;
  else status.textContent = "";

  const thumb = el<HTMLImageElement>("input-thumb");
  thumb.hidden = state.inputThumb === null;
  if (state.inputThumb) thumb.src = state.inputThumb;

  const counts = filterCounts(state);
  for (const g of ["all", "coarse", "middle", "fine"] as const) {
    const btn = el<HTMLButtonElement>(`filter-${g}`);
    btn.textContent = `${g} (${counts[g]})`;
    btn.classList.toggle("active", state.filter === g);
    btn.disabled = state.examples.length === 0;
  }

  const grid = el<HTMLDivElement>("gallery");
  grid.replaceChildren();
  for (const tile of visibleExamples(state)) {
    const cell = document.createElement("figure");
    cell.className = "tile";
    if (state.keepers.has(tile.id)) cell.classList.add("keeper");
    if (state.highlighted.has(tile.id)) cell.classList.add("highlighted");

    const img = document.createElement("img");
    img.src = tile.url;
    img.alt = tile.id;
    img.addEventListener("click", () => set(toggleKeeper(state, tile.id)));
    cell.appendChild(img);

    const caption = document.createElement("figcaption");
    const badge = document.createElement("span");
    badge.className = `badge ${tile.provenance}`;
    badge.textContent = tile.provenance;
    caption.appendChild(badge);
    if (tile.slotRange) {
      const label = document.createElement("span");
      label.className = "range";
      label.textContent = ` slots ${tile.slotRange[0]}–${tile.slotRange[1]} · ${tile.granularity}`;
      caption.appendChild(label);
    }
    cell.appendChild(caption);
    grid.appendChild(cell);
  }
}

function wire(): void {
  el<HTMLInputElement>("file-input").addEventListener("change", (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (file) void onFileChosen(file);
  });
  el<HTMLSelectElement>("condition").addEventListener("change", (ev) => {
    const value = (ev.target as HTMLSelectElement).value;
    state.controls.condition = value === "custom" ? null : Number(value);
  });
  el<HTMLSelectElement>("granularity").addEventListener("change", (ev) => {
    state.controls.granularity = (ev.target as HTMLSelectElement).value as never;
  });
  el<HTMLInputElement>("k-input").addEventListener("change", (ev) => {
    state.controls.k = Number((ev.target as HTMLInputElement).value) || 5;
  });
  el<HTMLButtonElement>("run").addEventListener("click", () => void runJob());
  el<HTMLButtonElement>("retry").addEventListener("click", () => {
    set(clearError(state));
    if (selectedFile && !state.inputId) void onFileChosen(selectedFile);
    else if (state.inputId) void runJob();
  });
  el<HTMLButtonElement>("export").addEventListener("click", downloadManifest);
  for (const g of ["all", "coarse", "middle", "fine"] as const) {
    el<HTMLButtonElement>(`filter-${g}`).addEventListener("click", () => set(setFilter(state, g)));
  }
  el<HTMLInputElement>("import-input").addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    try {
      set(importHighlights(state, JSON.parse(await file.text())));
    } catch {
      set(failed(state, "invalid keepers manifest"));
    }
  });
  render();
}

wire();
