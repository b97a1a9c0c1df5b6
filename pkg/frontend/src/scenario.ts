/** Scenario form model and client-side validation.
 *
 * Validation mirrors the service schema so obviously bad input never makes
 * a request; the service remains the authority and its 422s are surfaced
 * per field anyway.
 */

import type { RunRequest, SyntheticWorkload } from "./api.js";

export const LOSS_MODES = ["AC_BASELINE", "SMART_STAGING", "DC_380V"] as const;
export const POLICIES = ["FCFS", "SJF"] as const;

export interface ScenarioForm {
  label: string;
  policy: (typeof POLICIES)[number];
  lossMode: (typeof LOSS_MODES)[number];
  coolingEnabled: boolean;
  wetbulbC: number;
  seed: number;
  durationHours: number;
  tAvgS: number;
  nodeCountMean: number;
  nodeCountStd: number;
  wallTimeMeanMin: number;
  wallTimeStdMin: number;
  cpuUtilMean: number;
  gpuUtilMean: number;
  nodesTotalOverride: number | null;
}

export function defaultScenario(): ScenarioForm {
  return {
    label: "synthetic day",
    policy: "FCFS",
    lossMode: "AC_BASELINE",
    coolingEnabled: true,
    wetbulbC: 15,
    seed: 1,
    durationHours: 24,
    tAvgS: 138,
    nodeCountMean: 268,
    nodeCountStd: 626,
    wallTimeMeanMin: 39,
    wallTimeStdMin: 14,
    cpuUtilMean: 0.3,
    gpuUtilMean: 0.3,
    nodesTotalOverride: null,
  };
}

export interface FieldError {
  field: keyof ScenarioForm;
  message: string;
}

const MAX_NODES = 9600; // 25 CDUs x 3 racks x 128 nodes

export function validateScenario(form: ScenarioForm): FieldError[] {
  const errors: FieldError[] = [];
  const bad = (field: keyof ScenarioForm, message: string) =>
    errors.push({ field, message });

  if (!Number.isFinite(form.durationHours) || form.durationHours <= 0 || form.durationHours > 14 * 24)
    bad("durationHours", "duration must be in (0, 336] hours");
  if (!Number.isFinite(form.tAvgS) || form.tAvgS <= 0)
    bad("tAvgS", "mean inter-arrival must be positive");
  if (!Number.isFinite(form.nodeCountMean) || form.nodeCountMean < 1)
    bad("nodeCountMean", "mean nodes per job must be at least 1");
  if (form.nodeCountStd < 0) bad("nodeCountStd", "std must be >= 0");
  if (form.wallTimeMeanMin <= 0) bad("wallTimeMeanMin", "mean runtime must be positive");
  if (form.wallTimeStdMin < 0) bad("wallTimeStdMin", "std must be >= 0");
  if (form.cpuUtilMean < 0 || form.cpuUtilMean > 1)
    bad("cpuUtilMean", "CPU utilization must lie in [0, 1]");
  if (form.gpuUtilMean < 0 || form.gpuUtilMean > 1)
    bad("gpuUtilMean", "GPU utilization must lie in [0, 1]");
  if (!Number.isInteger(form.seed)) bad("seed", "seed must be an integer");
  if (form.wetbulbC < -30 || form.wetbulbC > 45)
    bad("wetbulbC", "wet-bulb must lie in [-30, 45] C");
  if (form.nodesTotalOverride !== null) {
    if (!Number.isInteger(form.nodesTotalOverride) || form.nodesTotalOverride < 1
        || form.nodesTotalOverride > MAX_NODES)
      bad("nodesTotalOverride", `node count override must be an integer in [1, ${MAX_NODES}]`);
  }
  if (!LOSS_MODES.includes(form.lossMode)) bad("lossMode", "unknown loss-model mode");
  if (!POLICIES.includes(form.policy)) bad("policy", "unknown policy");
  return errors;
}

export function toRunRequest(form: ScenarioForm): RunRequest {
  const workload: SyntheticWorkload = {
    type: "synthetic",
    duration_s: form.durationHours * 3600,
    seed: form.seed,
    t_avg_s: form.tAvgS,
    node_count_mean: form.nodeCountMean,
    node_count_std: form.nodeCountStd,
    wall_time_mean_s: form.wallTimeMeanMin * 60,
    wall_time_std_s: form.wallTimeStdMin * 60,
    cpu_util_mean: form.cpuUtilMean,
    cpu_util_std: 0.15,
    gpu_util_mean: form.gpuUtilMean,
    gpu_util_std: 0.18,
  };
  const config: Record<string, unknown> = {
    loss_model: { mode: form.lossMode },
    simulation: {
      policy: form.policy,
      cooling_enabled: form.coolingEnabled,
      wetbulb_c: form.wetbulbC,
      seed: form.seed,
    },
  };
  if (form.nodesTotalOverride !== null) {
    config.topology = { nodes_total: form.nodesTotalOverride };
  }
  return { label: form.label, config, workload };
}
