// Gallery state machine. Pure data + transition functions; rendering and
// network live elsewhere so every transition here is unit-testable.

export type Granularity = "all" | "coarse" | "middle" | "fine";
export type JobState = "queued" | "running" | "done" | "failed";
export type Phase = "idle" | "uploading" | "submitting" | "polling" | "ready" | "error";

export interface ExampleTile {
  id: string;
  url: string;
  provenance: "generated" | "real";
  granularity: Granularity | null;
  slotRange: [number, number] | null;
  jobId: string;
}

export interface Controls {
  condition: number | null; // 1..6, null = custom params
  granularity: Granularity;
  k: number;
}

export interface GalleryState {
  phase: Phase;
  inputId: string | null;
  inputThumb: string | null;
  jobId: string | null;
  jobState: JobState | null;
  examples: ExampleTile[];
  filter: Granularity;
  keepers: Set<string>;
  highlighted: Set<string>;
  controls: Controls;
  error: string | null;
}

export function initialState(): GalleryState {
  return {
    phase: "idle",
    inputId: null,
    inputThumb: null,
    jobId: null,
    jobState: null,
    examples: [],
    filter: "all",
    keepers: new Set(),
    highlighted: new Set(),
    controls: { condition: 5, granularity: "all", k: 5 },
    error: null,
  };
}

export function controlsLocked(s: GalleryState): boolean {
  return s.phase === "uploading" || s.phase === "submitting" || s.phase === "polling";
}

export function startUpload(s: GalleryState, thumb: string): GalleryState {
  return { ...s, phase: "uploading", inputThumb: thumb, error: null };
}

export function uploadDone(s: GalleryState, inputId: string): GalleryState {
  return { ...s, phase: "ready", inputId };
}

export function jobSubmitted(s: GalleryState, jobId: string): GalleryState {
  return { ...s, phase: "polling", jobId, jobState: "queued", error: null };
}

export function pollUpdate(s: GalleryState, jobState: JobState): GalleryState {
  if (jobState === "failed") {
    return { ...s, jobState, phase: "error", error: "job failed" };
  }
  return { ...s, jobState, phase: jobState === "done" ? "ready" : "polling" };
}

export function isTerminal(jobState: JobState): boolean {
  return jobState === "done" || jobState === "failed";
}

export function examplesLoaded(s: GalleryState, tiles: ExampleTile[]): GalleryState {
  // new gallery invalidates keepers that are no longer displayed
  const ids = new Set(tiles.map((t) => t.id));
  const keepers = new Set([...s.keepers].filter((id) => ids.has(id)));
  return { ...s, phase: "ready", examples: tiles, keepers, filter: "all" };
}

export function failed(s: GalleryState, message: string): GalleryState {
  return { ...s, phase: "error", error: message };
}

export function clearError(s: GalleryState): GalleryState {
  return { ...s, phase: s.examples.length ? "ready" : "idle", error: null };
}

export function setFilter(s: GalleryState, filter: Granularity): GalleryState {
  return { ...s, filter };
}

export function visibleExamples(s: GalleryState): ExampleTile[] {
  if (s.filter === "all") return s.examples;
  return s.examples.filter((t) => t.granularity === s.filter);
}

export function filterCounts(s: GalleryState): Record<Granularity, number> {
  const counts: Record<Granularity, number> = { all: s.examples.length, coarse: 0, middle: 0, fine: 0 };
  for (const t of s.examples) {
    if (t.granularity) counts[t.granularity] += 1;
  }
  return counts;
}

export function toggleKeeper(s: GalleryState, id: string): GalleryState {
  if (!s.examples.some((t) => t.id === id)) return s;
  const keepers = new Set(s.keepers);
  if (keepers.has(id)) keepers.delete(id);
  else keepers.add(id);
  return { ...s, keepers };
}

export interface KeeperManifest {
  version: 1;
  exported: string;
  keepers: { id: string; jobId: string; url: string; provenance: string }[];
}

export function exportKeepers(s: GalleryState, now: () => string = () => new Date().toISOString()): KeeperManifest {
  if (s.keepers.size === 0) throw new Error("no keepers to export");
  const entries = s.examples
    .filter((t) => s.keepers.has(t.id))
    .map((t) => ({ id: t.id, jobId: t.jobId, url: t.url, provenance: t.provenance }));
  return { version: 1, exported: now(), keepers: entries };
}

export function importHighlights(s: GalleryState, manifest: KeeperManifest): GalleryState {
  const ids = new Set(s.examples.map((t) => t.id));
  const highlighted = new Set(manifest.keepers.map((k) => k.id).filter((id) => ids.has(id)));
  return { ...s, highlighted };
}

// Poll schedule: 1s base, backoff capped at 5s.
export function pollDelayMs(attempt: number): number {
  return Math.min(1000 * Math.pow(1.5, Math.max(0, attempt - 3)), 5000);
}
