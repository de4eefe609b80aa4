// Thin typed wrappers over the job service HTTP API.

export interface JobInfo {
  id: string;
  state: "queued" | "running" | "done" | "failed";
  error?: string | null;
}

export interface ManifestExample {
  id: string;
  file: string;
  provenance: "generated" | "real";
  slot_range?: [number, number];
  granularity?: "coarse" | "middle" | "fine";
  source_id?: string;
}

export interface ExamplesResponse {
  manifest: {
    n: number;
    condition?: number;
    similarity?: number | null;
    diversity?: number | null;
    examples: ManifestExample[];
  };
  urls: string[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function check(resp: Response): Promise<Response> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body.detail) detail = String(body.detail);
    } catch {
      // non-JSON error body
    }
    throw new ApiError(resp.status, detail);
  }
  return resp;
}

export async function uploadInput(base: string, file: Blob): Promise<string> {
  const resp = await check(
    await fetch(`${base}/inputs`, { method: "POST", body: file })
  );
  return (await resp.json()).input_id;
}

export async function submitJob(
  base: string,
  inputId: string,
  request: { condition?: number; params?: Record<string, unknown> }
): Promise<string> {
  const resp = await check(
    await fetch(`${base}/jobs`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ input_id: inputId, ...request }),
    })
  );
  return (await resp.json()).job_id;
}

export async function getJob(base: string, jobId: string): Promise<JobInfo> {
  const resp = await check(await fetch(`${base}/jobs/${jobId}`));
  return resp.json();
}

export async function getExamples(base: string, jobId: string): Promise<ExamplesResponse> {
  const resp = await check(await fetch(`${base}/jobs/${jobId}/examples`));
  return resp.json();
}
