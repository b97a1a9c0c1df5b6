/** DOM wiring for the operator dashboard. */

import { ApiError, Client, type RunDescriptor } from "./api.js";
import { chooseStride, drawChart, type SeriesData } from "./charts.js";
import { POLL_INTERVAL_MS, pollUntilSettled } from "./poll.js";
import {
  LOSS_MODES,
  POLICIES,
  defaultScenario,
  toRunRequest,
  validateScenario,
  type ScenarioForm,
} from "./scenario.js";

const client = new Client("");
const state = {
  form: defaultScenario(),
  selectedRun: null as string | null,
  selectedMetric: "p_system_w",
  compareA: "",
  compareB: "",
};

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

const METRIC_CHOICES = [
  ["p_system_w", "system power"],
  ["loss_total_w", "conversion loss"],
  ["eta_system", "efficiency"],
  ["pue", "PUE"],
  ["nodes_busy", "busy nodes"],
  ["htw_supply_temp_c", "HTW supply temp"],
  ["cdu_00_secondary_supply_temp_c", "CDU0 supply temp"],
  ["num_ct_staged", "tower cells staged"],
] as const;

const COLORS = ["#53b1fd", "#f97066", "#32d583", "#fdb022"];

// ---------------------------------------------------------------- form
const FIELD_IDS: Record<string, keyof ScenarioForm> = {
  "f-label": "label",
  "f-seed": "seed",
  "f-hours": "durationHours",
  "f-tavg": "tAvgS",
  "f-nodes-mean": "nodeCountMean",
  "f-nodes-std": "nodeCountStd",
  "f-wall-mean": "wallTimeMeanMin",
  "f-wall-std": "wallTimeStdMin",
  "f-cpu": "cpuUtilMean",
  "f-gpu": "gpuUtilMean",
  "f-wetbulb": "wetbulbC",
};

function readForm(): void {
  const f = state.form;
  for (const [id, key] of Object.entries(FIELD_IDS)) {
    const el = $(id) as HTMLInputElement;
    if (key === "label") {
      f.label = el.value;
    } else {
      (f as unknown as Record<string, number>)[key] = Number(el.value);
    }
  }
  f.policy = ($("f-policy") as HTMLSelectElement).value as ScenarioForm["policy"];
  f.lossMode = ($("f-mode") as HTMLSelectElement).value as ScenarioForm["lossMode"];
  f.coolingEnabled = ($("f-cooling") as HTMLInputElement).checked;
  const override = ($("f-nodes-total") as HTMLInputElement).value.trim();
  f.nodesTotalOverride = override === "" ? null : Number(override);
}

function renderValidation(): boolean {
  const errors = validateScenario(state.form);
  const box = $("form-errors");
  box.innerHTML = "";
  for (const err of errors) {
    const li = document.createElement("li");
    li.textContent = `${err.field}: ${err.message}`;
    box.appendChild(li);
  }
  ($("launch") as HTMLButtonElement).disabled = errors.length > 0;
  return errors.length === 0;
}

async function launch(): Promise<void> {
  readForm();
  if (!renderValidation()) return;
  const status = $("launch-status");
  status.textContent = "submitting...";
  try {
    const { run_id } = await client.submitRun(toRunRequest(state.form));
    state.selectedRun = run_id;
    status.textContent = `launched ${run_id}`;
    void refreshRuns();
    void pollUntilSettled(
      client,
      run_id,
      {
        isStale: (id) => id !== state.selectedRun,
        onUpdate: (desc) => {
          status.textContent = `${desc.run_id}: ${desc.status} ${(100 * desc.progress).toFixed(0)}%`;
          if (desc.status === "DONE") {
            void refreshRuns();
            void showRun(desc.run_id);
          } else if (desc.status === "FAILED") {
            status.textContent = `${desc.run_id} FAILED: ${desc.error ?? "unknown"}`;
          }
        },
      },
      POLL_INTERVAL_MS,
    );
  } catch (err) {
    status.textContent = err instanceof ApiError ? `rejected: ${err.message}` : String(err);
  }
}

// ---------------------------------------------------------------- runs
function runLabel(d: RunDescriptor): string {
  const when = new Date(d.submitted_at * 1000).toISOString().slice(5, 16).replace("T", " ");
  return `${when}  ${d.label || d.run_id}  [${d.status}]`;
}

async function refreshRuns(): Promise<void> {
  const { runs } = await client.listRuns();
  const list = $("runs");
  list.innerHTML = "";
  for (const d of runs) {
    const li = document.createElement("li");
    li.textContent = runLabel(d);
    li.className = d.run_id === state.selectedRun ? "selected" : "";
    li.onclick = () => void showRun(d.run_id);
    list.appendChild(li);
  }
  for (const sel of [$("cmp-a") as HTMLSelectElement, $("cmp-b") as HTMLSelectElement]) {
    const current = sel.value;
    sel.innerHTML = "";
    for (const d of runs.filter((r) => r.status === "DONE")) {
      const opt = document.createElement("option");
      opt.value = d.run_id;
      opt.textContent = d.label || d.run_id;
      sel.appendChild(opt);
    }
    if (current) sel.value = current;
  }
}

async function showRun(runId: string): Promise<void> {
  state.selectedRun = runId;
  const desc = await client.getRun(runId);
  $("run-title").textContent = `${desc.label || runId} (${desc.status})`;
  if (desc.status === "DONE") {
    const report = await client.getReport(runId);
    const dl = $("report");
    dl.innerHTML = "";
    const rows: [string, string][] = [
      ["jobs completed", String(report.jobs_completed)],
      ["throughput", `${report.throughput_jobs_per_hr.toFixed(1)} jobs/h`],
      ["average power", `${report.avg_power_mw.toFixed(2)} MW`],
      ["energy", `${report.total_energy_mwhr.toFixed(1)} MWh`],
      ["conversion loss", `${report.loss_mw.toFixed(2)} MW (${report.loss_pct.toFixed(2)}%)`],
      ["efficiency", `${(100 * report.avg_eta_system).toFixed(2)}%`],
      ["CO2", `${report.co2_tons.toFixed(1)} t`],
      ["energy cost", `$${Math.round(report.energy_cost_usd).toLocaleString()}`],
      ["average PUE", report.avg_pue === null ? "n/a" : report.avg_pue.toFixed(4)],
    ];
    for (const [k, v] of rows) {
      const dt = document.createElement("dt");
      dt.textContent = k;
      const dd = document.createElement("dd");
      dd.textContent = v;
      dl.append(dt, dd);
    }
  }
  await renderMetricButtons(runId);
  await renderChart();
  void refreshRuns();
}

async function renderMetricButtons(runId: string): Promise<void> {
  const { metrics } = await client.getMetrics(runId);
  const known = new Set(metrics);
  const bar = $("metric-bar");
  bar.innerHTML = "";
  for (const [metric, label] of METRIC_CHOICES) {
    if (!known.has(metric)) continue; // unknown metrics stay hidden
    const btn = document.createElement("button");
    btn.textContent = label;
    btn.className = metric === state.selectedMetric ? "active" : "";
    btn.onclick = () => {
      state.selectedMetric = metric;
      void renderChart();
      void renderMetricButtons(runId);
    };
    bar.appendChild(btn);
  }
}

async function fetchSeries(runId: string, metric: string, color: string,
                           label: string): Promise<SeriesData> {
  const probe = await client.getSeries(runId, metric, 900);
  const total = probe.time_s.length * 900;
  const canvas = $("chart") as HTMLCanvasElement;
  const stride = chooseStride(total, canvas.width);
  const s = await client.getSeries(runId, metric, stride);
  return { label, time_s: s.time_s, values: s.values, color };
}

async function renderChart(): Promise<void> {
  if (!state.selectedRun) return;
  const canvas = $("chart") as HTMLCanvasElement;
  const metric = state.selectedMetric;
  try {
    const main = await fetchSeries(state.selectedRun, metric, COLORS[0], metric);
    const overlay: SeriesData[] = [main];
    const floor = metric === "pue" ? 1.0 : null;
    drawChart(canvas, overlay, floor);
    $("chart-title").textContent = metric;
  } catch (err) {
    $("chart-title").textContent = `${metric}: ${String(err)}`;
  }
}

// ---------------------------------------------------------------- compare
async function runCompare(): Promise<void> {
  const a = ($("cmp-a") as HTMLSelectElement).value;
  const b = ($("cmp-b") as HTMLSelectElement).value;
  if (!a || !b) return;
  const out = $("cmp-table");
  try {
    const cmp = await client.compareRuns(a, b);
    const rows = Object.entries(cmp.fields)
      .map(([k, f]) =>
        `<tr><td>${k}</td><td>${fmt(f.a)}</td><td>${fmt(f.b)}</td>` +
        `<td>${fmt(f.delta, true)}</td></tr>`)
      .join("");
    out.innerHTML =
      `<table><tr><th>field</th><th>A</th><th>B</th><th>delta</th></tr>${rows}</table>`;
    const canvas = $("cmp-chart") as HTMLCanvasElement;
    const sa = await fetchSeries(a, "eta_system", COLORS[0], "A");
    const sb = await fetchSeries(b, "eta_system", COLORS[1], "B");
    drawChart(canvas, [sa, sb]);
  } catch (err) {
    out.textContent = String(err);
  }
}

function fmt(v: number, signed = false): string {
  const s = Math.abs(v) >= 1000 ? v.toFixed(0) : v.toPrecision(4);
  return signed && v > 0 ? "+" + s : s;
}

// ---------------------------------------------------------------- init
function populateSelect(id: string, options: readonly string[]): void {
  const sel = $(id) as HTMLSelectElement;
  for (const o of options) {
    const opt = document.createElement("option");
    opt.value = o;
    opt.textContent = o;
    sel.appendChild(opt);
  }
}

export function init(): void {
  populateSelect("f-policy", POLICIES);
  populateSelect("f-mode", LOSS_MODES);
  const f = state.form;
  ($("f-label") as HTMLInputElement).value = f.label;
  ($("f-seed") as HTMLInputElement).value = String(f.seed);
  ($("f-hours") as HTMLInputElement).value = String(f.durationHours);
  ($("f-tavg") as HTMLInputElement).value = String(f.tAvgS);
  ($("f-nodes-mean") as HTMLInputElement).value = String(f.nodeCountMean);
  ($("f-nodes-std") as HTMLInputElement).value = String(f.nodeCountStd);
  ($("f-wall-mean") as HTMLInputElement).value = String(f.wallTimeMeanMin);
  ($("f-wall-std") as HTMLInputElement).value = String(f.wallTimeStdMin);
  ($("f-cpu") as HTMLInputElement).value = String(f.cpuUtilMean);
  ($("f-gpu") as HTMLInputElement).value = String(f.gpuUtilMean);
  ($("f-wetbulb") as HTMLInputElement).value = String(f.wetbulbC);
  ($("f-cooling") as HTMLInputElement).checked = f.coolingEnabled;

  document.querySelectorAll("#scenario input, #scenario select").forEach((el) => {
    el.addEventListener("input", () => {
      readForm();
      renderValidation();
    });
  });
  $("launch").onclick = () => void launch();
  $("refresh").onclick = () => void refreshRuns();
  $("compare").onclick = () => void runCompare();
  renderValidation();
  void refreshRuns();
}

if (typeof document !== "undefined" && document.getElementById("scenario")) {
  init();
}
