import type { ViewState } from "./types";

/** Subset of CanvasRenderingContext2D the renderer needs; tests stub it. */
export interface Canvas2d {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
}

export interface MapOptions {
  width: number;
  height: number;
  padding?: number; // px kept clear around the data, default 20
}

export interface Projection {
  toX(east: number): number;
  toY(north: number): number;
  scale: number; // px per meter, uniform
}

const MIN_SPAN_M = 20;

export function makeProjection(state: ViewState, opts: MapOptions): Projection {
  const pad = opts.padding ?? 20;
  let eMin = 0, eMax = 0, nMin = 0, nMax = 0;
  const extend = (e: number, n: number, r = 0) => {
    eMin = Math.min(eMin, e - r);
    eMax = Math.max(eMax, e + r);
    nMin = Math.min(nMin, n - r);
    nMax = Math.max(nMax, n + r);
  };
  for (const s of state.trajectory) extend(s.east, s.north);
  for (const w of state.overlays.waypoints) extend(w.east, w.north);
  for (const g of state.overlays.groundUsers) extend(g.east, g.north);
  for (const o of state.overlays.obstacles) extend(o.east, o.north, o.radius);
  if (eMax - eMin < MIN_SPAN_M) { eMin -= MIN_SPAN_M / 2; eMax += MIN_SPAN_M / 2; }
  if (nMax - nMin < MIN_SPAN_M) { nMin -= MIN_SPAN_M / 2; nMax += MIN_SPAN_M / 2; }
  const scale = Math.min(
    (opts.width - 2 * pad) / (eMax - eMin),
    (opts.height - 2 * pad) / (nMax - nMin),
  );
  const cx = (eMin + eMax) / 2;
  const cy = (nMin + nMax) / 2;
  return {
    toX: (east) => opts.width / 2 + (east - cx) * scale,
    toY: (north) => opts.height / 2 - (north - cy) * scale, // north is up
    scale,
  };
}

/** Draw the top-down ENU view. Pure function of the view state. */
export function renderMap(ctx: Canvas2d, state: ViewState, opts: MapOptions): Projection {
  const proj = makeProjection(state, opts);
  ctx.clearRect(0, 0, opts.width, opts.height);

  // ENU axes through the home origin
  ctx.strokeStyle = "#ccc";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(0, proj.toY(0));
  ctx.lineTo(opts.width, proj.toY(0));
  ctx.moveTo(proj.toX(0), 0);
  ctx.lineTo(proj.toX(0), opts.height);
  ctx.stroke();

  ctx.strokeStyle = "#b33";
  for (const o of state.overlays.obstacles) {
    ctx.beginPath();
    ctx.arc(proj.toX(o.east), proj.toY(o.north), o.radius * proj.scale, 0, 2 * Math.PI);
    ctx.stroke();
  }

  ctx.fillStyle = "#295";
  for (const g of state.overlays.groundUsers) {
    ctx.beginPath();
    ctx.arc(proj.toX(g.east), proj.toY(g.north), 3 + Math.sqrt(g.traffic) / 4, 0, 2 * Math.PI);
    ctx.fill();
  }

  ctx.strokeStyle = "#778";
  for (const w of state.overlays.waypoints) {
    ctx.beginPath();
    ctx.rect(proj.toX(w.east) - 3, proj.toY(w.north) - 3, 6, 6);
    ctx.stroke();
  }

  if (state.trajectory.length > 0) {
    ctx.strokeStyle = "#06c";
    ctx.lineWidth = 2;
    ctx.beginPath();
    const [first, ...rest] = state.trajectory;
    ctx.moveTo(proj.toX(first.east), proj.toY(first.north));
    for (const s of rest) ctx.lineTo(proj.toX(s.east), proj.toY(s.north));
    ctx.stroke();

    const cur = state.trajectory[state.trajectory.length - 1];
    ctx.fillStyle = "#06c";
    ctx.beginPath();
    ctx.arc(proj.toX(cur.east), proj.toY(cur.north), 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#000";
    ctx.font = "12px sans-serif";
    ctx.fillText(`${cur.phase} alt ${cur.up.toFixed(1)} m`, 8, 14);
  }
  return proj;
}
