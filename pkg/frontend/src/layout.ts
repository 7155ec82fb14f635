/** Graph layouts: a linlog-style force model and a layered-by-depth mode.
 *
 * The force model minimizes a linlog-flavored energy: attraction along
 * edges grows linearly with distance (constant-magnitude pull), repulsion
 * falls off as 1/d (logarithmic energy). That combination contracts densely
 * connected sub-graphs into tight clusters while pushing weakly connected
 * regions apart, which is what makes calculation clusters visible.
 *
 * Repulsion uses seeded random sampling per node instead of all O(n^2)
 * pairs, so iterations stay cheap at thousands of nodes and remain
 * deterministic for a given seed. Iterations are designed to be run in
 * small batches from the UI loop (time-slicing).
 */

import { mulberry32, Rng } from "./prng.js";

export interface Point {
  x: number;
  y: number;
}

export interface ForceOptions {
  attraction: number;
  repulsion: number;
  gravity: number;
  sampleSize: number;
  step: number;
  cooling: number;
}

export const DEFAULT_FORCE: ForceOptions = {
  attraction: 3.0,
  repulsion: 5.0,
  gravity: 0.012,
  sampleSize: 12,
  step: 6,
  cooling: 0.995,
};

export class ForceSimulation {
  readonly ids: string[];
  private readonly index = new Map<string, number>();
  private readonly edges: Array<[number, number]> = [];
  private readonly x: Float64Array;
  private readonly y: Float64Array;
  private readonly dx: Float64Array;
  private readonly dy: Float64Array;
  private readonly rng: Rng;
  private readonly opts: ForceOptions;
  private temperature: number;

  constructor(
    nodeIds: Iterable<string>,
    edges: Iterable<[string, string]>,
    seed: number,
    opts: Partial<ForceOptions> = {},
  ) {
    this.ids = [...nodeIds].sort();
    this.ids.forEach((id, i) => this.index.set(id, i));
    for (const [a, b] of edges) {
      const ia = this.index.get(a);
      const ib = this.index.get(b);
      if (ia !== undefined && ib !== undefined && ia !== ib) {
        this.edges.push([ia, ib]);
      }
    }
    this.opts = { ...DEFAULT_FORCE, ...opts };
    this.rng = mulberry32(seed);
    this.temperature = this.opts.step;
    const n = this.ids.length;
    this.x = new Float64Array(n);
    this.y = new Float64Array(n);
    this.dx = new Float64Array(n);
    this.dy = new Float64Array(n);
    const radius = Math.max(60, 14 * Math.sqrt(n));
    for (let i = 0; i < n; i++) {
      const angle = this.rng() * 2 * Math.PI;
      const r = radius * Math.sqrt(this.rng());
      this.x[i] = r * Math.cos(angle);
      this.y[i] = r * Math.sin(angle);
    }
  }

  /** Advance the simulation by `count` iterations. */
  run(count: number): void {
    const n = this.ids.length;
    if (n < 2) return;
    const { attraction, repulsion, gravity, sampleSize } = this.opts;
    const scale = (n - 1) / Math.min(sampleSize, n - 1);
    for (let iter = 0; iter < count; iter++) {
      this.dx.fill(0);
      this.dy.fill(0);
      // Sampled 1/d repulsion, rescaled to approximate the full pair sum.
      for (let i = 0; i < n; i++) {
        for (let s = 0; s < sampleSize; s++) {
          const j = Math.floor(this.rng() * n);
          if (j === i) continue;
          let vx = this.x[i] - this.x[j];
          let vy = this.y[i] - this.y[j];
          let d2 = vx * vx + vy * vy;
          if (d2 < 0.01) {
            vx = this.rng() - 0.5;
            vy = this.rng() - 0.5;
            d2 = vx * vx + vy * vy;
          }
          const f = (repulsion * scale) / d2; // force magnitude 1/d along unit vector
          this.dx[i] += vx * f;
          this.dy[i] += vy * f;
        }
      }
      // Constant-magnitude attraction along each edge (linear energy),
      // applied through the unit vector.
      for (const [a, b] of this.edges) {
        const vx = this.x[b] - this.x[a];
        const vy = this.y[b] - this.y[a];
        const d = Math.sqrt(vx * vx + vy * vy) + 1e-9;
        const f = attraction / d;
        this.dx[a] += vx * f;
        this.dy[a] += vy * f;
        this.dx[b] -= vx * f;
        this.dy[b] -= vy * f;
      }
      // Weak gravity keeps disconnected pieces on screen.
      for (let i = 0; i < n; i++) {
        this.dx[i] -= this.x[i] * gravity;
        this.dy[i] -= this.y[i] * gravity;
      }
      const limit = this.temperature;
      for (let i = 0; i < n; i++) {
        const len = Math.sqrt(this.dx[i] * this.dx[i] + this.dy[i] * this.dy[i]);
        if (len > 0) {
          const k = Math.min(len, limit) / len;
          this.x[i] += this.dx[i] * k;
          this.y[i] += this.dy[i] * k;
        }
      }
      this.temperature *= this.opts.cooling;
    }
  }

  positions(): Map<string, Point> {
    const out = new Map<string, Point>();
    this.ids.forEach((id, i) => out.set(id, { x: this.x[i], y: this.y[i] }));
    return out;
  }
}

/** One-shot force layout (used by tests and initial loads). */
export function forceLayout(
  nodeIds: Iterable<string>,
  edges: Iterable<[string, string]>,
  seed: number,
  iterations = 300,
  opts: Partial<ForceOptions> = {},
): Map<string, Point> {
  const sim = new ForceSimulation(nodeIds, edges, seed, opts);
  sim.run(iterations);
  return sim.positions();
}

/** Layered layout: column = dataflow depth, row = stable order in layer.
 *
 * Depth is the longest precedent chain: sources sit in column 0 and each
 * node one column right of its deepest feeder. Cycles (possible only in
 * defective exports) are cut by treating back-references as depth 0.
 */
export function layeredLayout(
  nodeIds: Iterable<string>,
  edges: Iterable<[string, string]>,
  columnGap = 160,
  rowGap = 28,
): Map<string, Point> {
  const ids = [...nodeIds].sort();
  const feeders = new Map<string, string[]>();
  for (const id of ids) feeders.set(id, []);
  for (const [from, to] of edges) {
    if (feeders.has(from) && feeders.has(to)) feeders.get(to)!.push(from);
  }
  const depth = new Map<string, number>();
  const onStack = new Set<string>();
  const compute = (id: string): number => {
    const known = depth.get(id);
    if (known !== undefined) return known;
    if (onStack.has(id)) return 0;
    onStack.add(id);
    let d = 0;
    for (const f of feeders.get(id) ?? []) {
      d = Math.max(d, compute(f) + 1);
    }
    onStack.delete(id);
    depth.set(id, d);
    return d;
  };
  for (const id of ids) compute(id);

  const layers = new Map<number, string[]>();
  for (const id of ids) {
    const d = depth.get(id)!;
    if (!layers.has(d)) layers.set(d, []);
    layers.get(d)!.push(id);
  }
  const out = new Map<string, Point>();
  for (const [d, members] of [...layers.entries()].sort((a, b) => a[0] - b[0])) {
    members.sort();
    members.forEach((id, row) => {
      out.set(id, { x: d * columnGap, y: (row - (members.length - 1) / 2) * rowGap });
    });
  }
  return out;
}
