import { describe, expect, it } from "vitest";

import { defaultScenario, toRunRequest, validateScenario } from "../src/scenario.js";

describe("scenario validation", () => {
  it("accepts the default scenario", () => {
    expect(validateScenario(defaultScenario())).toEqual([]);
  });

  it("flags a non-positive duration", () => {
    const form = { ...defaultScenario(), durationHours: 0 };
    const errors = validateScenario(form);
    expect(errors.map((e) => e.field)).toContain("durationHours");
  });

  it("flags utilization outside [0, 1]", () => {
    const form = { ...defaultScenario(), gpuUtilMean: 1.2 };
    expect(validateScenario(form).map((e) => e.field)).toContain("gpuUtilMean");
  });

  it("flags an oversized node override without sending a request", () => {
    const form = { ...defaultScenario(), nodesTotalOverride: 99999 };
    const errors = validateScenario(form);
    expect(errors).toHaveLength(1);
    expect(errors[0].field).toBe("nodesTotalOverride");
  });

  it("flags non-integer seeds", () => {
    const form = { ...defaultScenario(), seed: 1.5 };
    expect(validateScenario(form).map((e) => e.field)).toContain("seed");
  });

  it("collects multiple errors at once", () => {
    const form = { ...defaultScenario(), tAvgS: -1, cpuUtilMean: 7 };
    expect(validateScenario(form).length).toBeGreaterThanOrEqual(2);
  });
});

describe("run request mapping", () => {
  it("converts hours and minutes to seconds", () => {
    const req = toRunRequest({ ...defaultScenario(), durationHours: 2, wallTimeMeanMin: 30 });
    const w = req.workload as { duration_s: number; wall_time_mean_s: number };
    expect(w.duration_s).toBe(7200);
    expect(w.wall_time_mean_s).toBe(1800);
  });

  it("only overrides topology when asked", () => {
    const plain = toRunRequest(defaultScenario());
    expect(plain.config.topology).toBeUndefined();
    const overridden = toRunRequest({ ...defaultScenario(), nodesTotalOverride: 128 });
    expect(overridden.config.topology).toEqual({ nodes_total: 128 });
  });

  it("carries the loss mode and policy into the config", () => {
    const req = toRunRequest({ ...defaultScenario(), lossMode: "DC_380V", policy: "SJF" });
    expect(req.config.loss_model).toEqual({ mode: "DC_380V" });
    expect((req.config.simulation as { policy: string }).policy).toBe("SJF");
  });
});
