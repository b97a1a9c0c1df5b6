/** Launch-and-track: submit a scenario, then poll until it settles.
 *
 * Stale responses are discarded by run id: if the caller moves on to a new
 * run, late updates from an old poll loop never reach the UI.
 */

import type { Client, RunDescriptor } from "./api.js";
import { toRunRequest, validateScenario, type ScenarioForm } from "./scenario.js";

export const POLL_INTERVAL_MS = 2000;

export interface TrackCallbacks {
  onUpdate?: (desc: RunDescriptor) => void;
  isStale?: (runId: string) => boolean;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export async function pollUntilSettled(
  client: Client,
  runId: string,
  callbacks: TrackCallbacks = {},
  intervalMs: number = POLL_INTERVAL_MS,
  timeoutMs: number = 60 * 60 * 1000,
): Promise<RunDescriptor> {
  const t0 = Date.now();
  for (;;) {
    const desc = await client.getRun(runId);
    if (callbacks.isStale?.(runId)) return desc;
    callbacks.onUpdate?.(desc);
    if (desc.status === "DONE" || desc.status === "FAILED") return desc;
    if (Date.now() - t0 > timeoutMs) throw new Error(`run ${runId} timed out`);
    await sleep(intervalMs);
  }
}

export async function launchAndTrack(
  client: Client,
  form: ScenarioForm,
  callbacks: TrackCallbacks = {},
  intervalMs: number = POLL_INTERVAL_MS,
): Promise<RunDescriptor> {
  const errors = validateScenario(form);
  if (errors.length > 0) {
    throw new Error("invalid scenario: " + errors.map((e) => `${e.field}: ${e.message}`).join("; "));
  }
  const { run_id } = await client.submitRun(toRunRequest(form));
  return pollUntilSettled(client, run_id, callbacks, intervalMs);
}
