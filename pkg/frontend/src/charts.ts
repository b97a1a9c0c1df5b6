/** Minimal canvas line charts: pure layout math plus a thin draw step.
 *
 * Layout is separated from painting so the scaling logic is unit-testable
 * without a DOM.
 */

export interface SeriesData {
  label: string;
  time_s: number[];
  values: number[];
  color: string;
}

export interface ChartLayout {
  xOf: (t: number) => number;
  yOf: (v: number) => number;
  tMin: number;
  tMax: number;
  vMin: number;
  vMax: number;
  yTicks: number[];
}

const PAD = { left: 64, right: 12, top: 10, bottom: 24 };

/** Pick a request stride so a series of totalPoints lands near two samples
 * per pixel of viewport, keeping payloads small on wide time ranges. */
export function chooseStride(totalPoints: number, viewportPx: number): number {
  const target = Math.max(2 * viewportPx, 100);
  return Math.max(1, Math.floor(totalPoints / target));
}

export function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const first = Math.ceil(lo / s) * s;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12; v += s) ticks.push(v);
  return ticks;
}

export function layoutChart(
  series: SeriesData[],
  width: number,
  height: number,
  vFloor: number | null = null,
): ChartLayout {
  let tMin = Infinity, tMax = -Infinity, vMin = Infinity, vMax = -Infinity;
  for (const s of series) {
    for (const t of s.time_s) {
      if (t < tMin) tMin = t;
      if (t > tMax) tMax = t;
    }
    for (const v of s.values) {
      if (Number.isFinite(v)) {
        if (v < vMin) vMin = v;
        if (v > vMax) vMax = v;
      }
    }
  }
  if (!Number.isFinite(tMin)) { tMin = 0; tMax = 1; }
  if (!Number.isFinite(vMin)) { vMin = 0; vMax = 1; }
  if (vFloor !== null && vFloor < vMin) vMin = vFloor;
  if (vMax === vMin) vMax = vMin + 1;
  const margin = 0.05 * (vMax - vMin);
  vMax += margin;
  if (vFloor === null || vMin - margin > vFloor) vMin -= margin;

  const plotW = width - PAD.left - PAD.right;
  const plotH = height - PAD.top - PAD.bottom;
  const xOf = (t: number) => PAD.left + ((t - tMin) / (tMax - tMin || 1)) * plotW;
  const yOf = (v: number) => PAD.top + (1 - (v - vMin) / (vMax - vMin)) * plotH;
  return { xOf, yOf, tMin, tMax, vMin, vMax, yTicks: niceTicks(vMin, vMax) };
}

export function formatTick(v: number): string {
  const a = Math.abs(v);
  if (a >= 1e6) return (v / 1e6).toFixed(1) + "M";
  if (a >= 1e3) return (v / 1e3).toFixed(1) + "k";
  if (a >= 10) return v.toFixed(0);
  return v.toFixed(2);
}

export function formatHours(seconds: number): string {
  return (seconds / 3600).toFixed(1) + "h";
}

export function drawChart(
  canvas: HTMLCanvasElement,
  series: SeriesData[],
  vFloor: number | null = null,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const layout = layoutChart(series, width, height, vFloor);

  ctx.strokeStyle = "#2a2f3a";
  ctx.fillStyle = "#8b93a3";
  ctx.font = "11px sans-serif";
  for (const tick of layout.yTicks) {
    const y = layout.yOf(tick);
    ctx.beginPath();
    ctx.moveTo(PAD.left, y);
    ctx.lineTo(width - PAD.right, y);
    ctx.stroke();
    ctx.fillText(formatTick(tick), 6, y + 4);
  }
  const xticks = niceTicks(layout.tMin, layout.tMax, 6);
  for (const tick of xticks) {
    ctx.fillText(formatHours(tick), layout.xOf(tick) - 10, height - 8);
  }
  if (vFloor !== null && vFloor >= layout.vMin) {
    const y = layout.yOf(vFloor);
    ctx.strokeStyle = "#596275";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(PAD.left, y);
    ctx.lineTo(width - PAD.right, y);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.4;
    ctx.beginPath();
    let pen = false;
    for (let i = 0; i < s.time_s.length; i++) {
      const v = s.values[i];
      if (!Number.isFinite(v)) { pen = false; continue; }
      const x = layout.xOf(s.time_s[i]);
      const y = layout.yOf(v);
      if (pen) ctx.lineTo(x, y);
      else { ctx.moveTo(x, y); pen = true; }
    }
    ctx.stroke();
  }
}
