/** Canvas rendering of the calculation graph. Pure drawing, no state. */

import { Point } from "./layout.js";
import { ViewState } from "./state.js";

export interface Viewport {
  offsetX: number;
  offsetY: number;
  zoom: number;
}

export function fitViewport(
  state: ViewState,
  width: number,
  height: number,
): Viewport {
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const id of state.visibleNodeIds()) {
    const p = state.positions.get(id);
    if (!p) continue;
    minX = Math.min(minX, p.x);
    minY = Math.min(minY, p.y);
    maxX = Math.max(maxX, p.x);
    maxY = Math.max(maxY, p.y);
  }
  if (!Number.isFinite(minX)) return { offsetX: width / 2, offsetY: height / 2, zoom: 1 };
  const spanX = Math.max(maxX - minX, 1);
  const spanY = Math.max(maxY - minY, 1);
  const zoom = Math.min((width - 60) / spanX, (height - 60) / spanY, 2.5);
  return {
    offsetX: width / 2 - ((minX + maxX) / 2) * zoom,
    offsetY: height / 2 - ((minY + maxY) / 2) * zoom,
    zoom,
  };
}

function toScreen(p: Point, vp: Viewport): Point {
  return { x: p.x * vp.zoom + vp.offsetX, y: p.y * vp.zoom + vp.offsetY };
}

export function hitTest(
  state: ViewState,
  vp: Viewport,
  sx: number,
  sy: number,
  radius = 8,
): string | null {
  let best: string | null = null;
  let bestD = radius * radius;
  for (const id of state.visibleNodeIds()) {
    const p = state.positions.get(id);
    if (!p) continue;
    const s = toScreen(p, vp);
    const d = (s.x - sx) ** 2 + (s.y - sy) ** 2;
    if (d <= bestD) {
      bestD = d;
      best = id;
    }
  }
  return best;
}

export function draw(
  ctx: CanvasRenderingContext2D,
  state: ViewState,
  vp: Viewport,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const { full, stubs } = state.visibleEdges();
  const matches = state.searchMatches();

  ctx.lineWidth = 0.6;
  ctx.strokeStyle = "rgba(120,120,120,0.35)";
  ctx.beginPath();
  for (const [from, to] of full) {
    const a = state.positions.get(from);
    const b = state.positions.get(to);
    if (!a || !b) continue;
    const sa = toScreen(a, vp);
    const sb = toScreen(b, vp);
    ctx.moveTo(sa.x, sa.y);
    ctx.lineTo(sb.x, sb.y);
  }
  ctx.stroke();

  // Stub edges: short dashes toward the hidden side.
  ctx.strokeStyle = "rgba(120,120,120,0.5)";
  ctx.setLineDash([3, 3]);
  ctx.beginPath();
  for (const [from, to] of stubs) {
    const shownId = state.isVisible(from) ? from : to;
    const hiddenId = shownId === from ? to : from;
    const a = state.positions.get(shownId);
    const b = state.positions.get(hiddenId);
    if (!a || !b) continue;
    const sa = toScreen(a, vp);
    const sb = toScreen(b, vp);
    const dx = sb.x - sa.x;
    const dy = sb.y - sa.y;
    const len = Math.sqrt(dx * dx + dy * dy) + 1e-9;
    const k = Math.min(18, len) / len;
    ctx.moveTo(sa.x, sa.y);
    ctx.lineTo(sa.x + dx * k, sa.y + dy * k);
  }
  ctx.stroke();
  ctx.setLineDash([]);

  for (const id of state.visibleNodeIds()) {
    const node = state.nodesById.get(id)!;
    const p = state.positions.get(id);
    if (!p) continue;
    const s = toScreen(p, vp);
    const isKpi = node.kind === "kpi";
    const r = isKpi ? 7 : node.kind === "range-aggregate" ? 5.5 : 3.5;
    ctx.beginPath();
    if (node.kind === "range-aggregate") {
      ctx.rect(s.x - r, s.y - r, 2 * r, 2 * r);
    } else {
      ctx.arc(s.x, s.y, r, 0, 2 * Math.PI);
    }
    ctx.fillStyle = state.colorOf(node);
    ctx.fill();
    if (isKpi) {
      ctx.lineWidth = 2;
      ctx.strokeStyle = "#111";
      ctx.stroke();
    }
    if (matches.has(id)) {
      ctx.lineWidth = 2;
      ctx.strokeStyle = "#e6b400";
      ctx.beginPath();
      ctx.arc(s.x, s.y, r + 3, 0, 2 * Math.PI);
      ctx.stroke();
    }
    if (state.selection === id) {
      ctx.lineWidth = 2.5;
      ctx.strokeStyle = "#d62728";
      ctx.beginPath();
      ctx.arc(s.x, s.y, r + 5, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}
