/** Typed client for the scenario service HTTP API.
 *
 * The dashboard performs no simulation math of its own: every number it
 * shows comes from these endpoints.
 */

export type RunStatus = "QUEUED" | "RUNNING" | "DONE" | "FAILED";

export interface RunDescriptor {
  run_id: string;
  status: RunStatus;
  progress: number;
  submitted_at: number;
  finished_at: number | null;
  error: string | null;
  label: string;
}

export interface Report {
  jobs_completed: number;
  throughput_jobs_per_hr: number;
  avg_power_mw: number;
  total_energy_mwhr: number;
  loss_mw: number;
  loss_pct: number;
  co2_tons: number;
  energy_cost_usd: number;
  avg_eta_system: number;
  total_energy_output_mwhr: number;
  avg_pue: number | null;
  [key: string]: unknown;
}

export interface Series {
  metric: string;
  stride: number;
  time_s: number[];
  values: number[];
}

export interface CompareField {
  a: number;
  b: number;
  delta: number;
  pct: number | null;
}

export interface CompareResult {
  a: string;
  b: string;
  fields: Record<string, CompareField>;
}

export interface SyntheticWorkload {
  type: "synthetic";
  duration_s: number;
  seed: number;
  t_avg_s: number;
  node_count_mean: number;
  node_count_std: number;
  wall_time_mean_s: number;
  wall_time_std_s: number;
  cpu_util_mean: number;
  cpu_util_std: number;
  gpu_util_mean: number;
  gpu_util_std: number;
}

export interface RunRequest {
  label: string;
  config: Record<string, unknown>;
  workload: SyntheticWorkload | { type: "trace"; path: string };
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let detail = `${resp.status} ${resp.statusText}`;
    try {
      const body = await resp.json();
      if (body && body.detail) detail = JSON.stringify(body.detail);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  if (resp.status === 204) return undefined as T;
  return (await resp.json()) as T;
}

export class Client {
  constructor(readonly base: string = "") {}

  submitRun(req: RunRequest): Promise<{ run_id: string }> {
    return request(this.base, "/runs", { method: "POST", body: JSON.stringify(req) });
  }

  listRuns(): Promise<{ runs: RunDescriptor[] }> {
    return request(this.base, "/runs");
  }

  getRun(runId: string): Promise<RunDescriptor> {
    return request(this.base, `/runs/${runId}`);
  }

  getReport(runId: string): Promise<Report> {
    return request(this.base, `/runs/${runId}/report`);
  }

  getMetrics(runId: string): Promise<{ metrics: string[] }> {
    return request(this.base, `/runs/${runId}/metrics`);
  }

  getSeries(runId: string, metric: string, stride = 1): Promise<Series> {
    const q = new URLSearchParams({ metric, stride: String(stride) });
    return request(this.base, `/runs/${runId}/series?${q}`);
  }

  compareRuns(a: string, b: string): Promise<CompareResult> {
    const q = new URLSearchParams({ a, b });
    return request(this.base, `/compare?${q}`);
  }

  deleteRun(runId: string): Promise<void> {
    return request(this.base, `/runs/${runId}`, { method: "DELETE" });
  }
}
