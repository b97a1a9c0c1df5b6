/** End-to-end: the dashboard flow against a live service instance.
 *
 * Spawns the Python service on a scratch store, then drives the same code
 * paths the UI uses: compose a default scenario (scaled down to a toy
 * machine so the whole flow runs in seconds), launch it, poll progress to
 * DONE, pull the power and PUE series through the chart pipeline, and
 * finish with an A/B comparison of AC vs DC loss modes.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client, type RunDescriptor } from "../src/api.js";
import { chooseStride, layoutChart } from "../src/charts.js";
import { launchAndTrack } from "../src/poll.js";
import { defaultScenario, toRunRequest, validateScenario, type ScenarioForm } from "../src/scenario.js";

const PORT = 18000 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;
let storeDir: string;
const client = new Client(BASE);

function toyScenario(overrides: Partial<ScenarioForm> = {}): ScenarioForm {
  return {
    ...defaultScenario(),
    durationHours: 0.1,
    tAvgS: 20,
    nodeCountMean: 6,
    nodeCountStd: 4,
    wallTimeMeanMin: 1.5,
    wallTimeStdMin: 0.5,
    nodesTotalOverride: null,
    ...overrides,
  };
}

// The default machine is 9472 nodes; the e2e flow uses a 80-node toy
// topology so runs finish in a couple of seconds.
const TOY_TOPOLOGY = {
  num_cdus: 2, racks_per_cdu: 3, chassis_per_rack: 2,
  rectifiers_per_rack: 8, blades_per_rack: 8, nodes_per_rack: 16,
  sivocs_per_rack: 16, switches_per_rack: 4, nodes_total: 80,
};

function toyRequest(form: ScenarioForm) {
  const req = toRunRequest(form);
  req.config.topology = TOY_TOPOLOGY;
  return req;
}

async function waitForService(timeoutMs = 30_000): Promise<void> {
  const t0 = Date.now();
  for (;;) {
    try {
      await client.listRuns();
      return;
    } catch {
      if (Date.now() - t0 > timeoutMs) throw new Error("service did not come up");
      await new Promise((r) => setTimeout(r, 250));
    }
  }
}

beforeAll(async () => {
  storeDir = mkdtempSync(join(tmpdir(), "hpctwin-e2e-"));
  service = spawn(
    "python3",
    ["-m", "hpctwin.cli", "serve", "--port", String(PORT), "--store", storeDir],
    { stdio: ["ignore", "pipe", "pipe"], cwd: join(__dirname, "..", "..") },
  );
  service.stderr?.on("data", (d: Buffer) => {
    const line = d.toString();
    if (line.includes("Traceback")) console.error(line);
  });
  await waitForService();
}, 40_000);

afterAll(() => {
  service?.kill();
  if (storeDir) rmSync(storeDir, { recursive: true, force: true });
});

describe("dashboard end-to-end", () => {
  it("launches a default scenario and tracks it to DONE", async () => {
    const form = toyScenario({ label: "e2e baseline" });
    expect(validateScenario(form)).toEqual([]);

    const updates: RunDescriptor[] = [];
    const { run_id } = await client.submitRun(toyRequest(form));
    const { pollUntilSettled } = await import("../src/poll.js");
    const final = await pollUntilSettled(client, run_id,
      { onUpdate: (d) => updates.push(d) }, 100);

    expect(final.status).toBe("DONE");
    expect(updates.length).toBeGreaterThan(0);
    const progresses = updates.map((u) => u.progress);
    for (let i = 1; i < progresses.length; i++) {
      expect(progresses[i]).toBeGreaterThanOrEqual(progresses[i - 1]);
    }

    const report = await client.getReport(final.run_id);
    expect(report.jobs_completed).toBeGreaterThan(0);
    expect(report.avg_power_mw).toBeGreaterThan(0);
    expect(report.avg_pue).not.toBeNull();
  }, 120_000);

  it("renders power and PUE series through the chart pipeline", async () => {
    const { runs } = await client.listRuns();
    const done = runs.find((r) => r.status === "DONE");
    expect(done).toBeDefined();
    const runId = done!.run_id;

    const { metrics } = await client.getMetrics(runId);
    expect(metrics).toContain("p_system_w");
    expect(metrics).toContain("pue");

    const power = await client.getSeries(runId, "p_system_w",
      chooseStride(360, 860));
    expect(power.values.length).toBeGreaterThan(1);
    const powerLayout = layoutChart(
      [{ label: "p", color: "#fff", time_s: power.time_s, values: power.values }],
      860, 300);
    expect(powerLayout.vMax).toBeGreaterThan(0);

    const pue = await client.getSeries(runId, "pue");
    expect(pue.values.every((v) => v > 1.0)).toBe(true);
    const pueLayout = layoutChart(
      [{ label: "pue", color: "#fff", time_s: pue.time_s, values: pue.values }],
      860, 300, 1.0);
    expect(pueLayout.vMin).toBeLessThanOrEqual(1.0); // the 1.0 gridline is visible
  }, 60_000);

  it("rejects an invalid node-count override before any request", () => {
    const form = toyScenario({ nodesTotalOverride: 123456 });
    const errors = validateScenario(form);
    expect(errors).toHaveLength(1);
    expect(errors[0].field).toBe("nodesTotalOverride");
  });

  it("surfaces service-side schema rejections", async () => {
    const req = toyRequest(toyScenario());
    (req.config as Record<string, unknown>).not_a_section = {};
    await expect(client.submitRun(req)).rejects.toThrow(/not_a_section/);
  });

  it("compares AC vs DC modes and shows the efficiency delta", async () => {
    const seeds = { seed: 21 };
    const base = toyScenario({ label: "cmp AC", lossMode: "AC_BASELINE",
                               coolingEnabled: false, ...seeds });
    const dc = toyScenario({ label: "cmp DC", lossMode: "DC_380V",
                             coolingEnabled: false, ...seeds });

    const [runA, runB] = await Promise.all([
      client.submitRun(toyRequest(base)),
      client.submitRun(toyRequest(dc)),
    ]);
    const { pollUntilSettled } = await import("../src/poll.js");
    const [descA, descB] = await Promise.all([
      pollUntilSettled(client, runA.run_id, {}, 100),
      pollUntilSettled(client, runB.run_id, {}, 100),
    ]);
    expect(descA.status).toBe("DONE");
    expect(descB.status).toBe("DONE");

    const cmp = await client.compareRuns(runA.run_id, runB.run_id);
    const eta = cmp.fields["avg_eta_system"];
    expect(eta).toBeDefined();
    expect(eta.b).toBeCloseTo(0.973, 3); // DC distribution is flat-efficiency
    expect(eta.delta).toBeGreaterThan(0.02); // DC clearly beats AC baseline
    // same workload: the job stream itself is identical
    expect(cmp.fields["jobs_completed"].delta).toBe(0);
  }, 120_000);

  it("launchAndTrack refuses invalid forms client-side", async () => {
    const bad = toyScenario({ durationHours: -1 });
    await expect(launchAndTrack(client, bad, {}, 50)).rejects.toThrow(/durationHours/);
  });
});
