/** Usage tracing: how a selected cell feeds the KPIs.
 *
 * Paths follow dataflow edges (from feeds to) from the selected node until
 * they reach a KPI node, restricted to currently visible nodes. The panel
 * shows full simple paths, grouped into families by the first hop (the
 * direct dependent a path leaves through), with direct dependents listed
 * first. Enumeration is capped; the exact total comes from a path-count
 * DP over the acyclic graph so the cap can report "N more".
 */

import { ExportNode } from "./types.js";

export interface TraceHop {
  id: string;
  label?: string;
  /** Formula of the consuming node: how this hop uses the previous one. */
  formulaText?: string;
}

export interface PathFamily {
  /** Direct dependent the family's paths leave through ("" for the
   * zero-length self path of a selected KPI). */
  via: string;
  paths: TraceHop[][];
}

export interface UsageTrace {
  nodeId: string;
  directDependents: string[];
  families: PathFamily[];
  totalPaths: number;
  shownPaths: number;
  morePaths: number;
}

export const PATH_CAP = 50;

function hop(node: ExportNode | undefined, id: string): TraceHop {
  if (!node) return { id };
  const h: TraceHop = { id };
  if (node.label) h.label = node.label;
  if (node.formulaText) h.formulaText = node.formulaText;
  return h;
}

/** Exact number of (simple, by acyclicity) paths from each node to a KPI.
 * Returns NaN totals when a cycle is present in the visible sub-graph. */
function countPaths(
  dependents: Map<string, string[]>,
  kpis: ReadonlySet<string>,
  visible: (id: string) => boolean,
  start: string,
): number {
  const memo = new Map<string, number>();
  const onStack = new Set<string>();
  let cyclic = false;
  const count = (id: string): number => {
    const known = memo.get(id);
    if (known !== undefined) return known;
    if (onStack.has(id)) {
      cyclic = true;
      return 0;
    }
    onStack.add(id);
    let total = kpis.has(id) ? 1 : 0;
    for (const next of dependents.get(id) ?? []) {
      if (visible(next)) total += count(next);
    }
    onStack.delete(id);
    memo.set(id, total);
    return total;
  };
  const result = count(start);
  return cyclic ? NaN : result;
}

export function tracePaths(
  nodesById: Map<string, ExportNode>,
  dependents: Map<string, string[]>,
  kpis: ReadonlySet<string>,
  start: string,
  visible: (id: string) => boolean = () => true,
  cap: number = PATH_CAP,
): UsageTrace {
  const directDependents = (dependents.get(start) ?? []).filter(visible).sort();
  const collected: TraceHop[][] = [];
  let shown = 0;

  const walk = (id: string, path: TraceHop[], onPath: Set<string>): void => {
    if (shown >= cap) return;
    if (kpis.has(id)) {
      collected.push([...path]);
      shown++;
      if (shown >= cap) return;
      // A KPI may itself feed further KPIs; keep walking.
    }
    for (const next of (dependents.get(id) ?? []).slice().sort()) {
      if (!visible(next) || onPath.has(next)) continue;
      onPath.add(next);
      path.push(hop(nodesById.get(next), next));
      walk(next, path, onPath);
      path.pop();
      onPath.delete(next);
      if (shown >= cap) return;
    }
  };

  walk(start, [hop(nodesById.get(start), start)], new Set([start]));

  let total = countPaths(dependents, kpis, visible, start);
  if (Number.isNaN(total)) {
    total = collected.length; // defective (cyclic) export: report what we saw
  }

  const familyOrder: string[] = [];
  const byVia = new Map<string, TraceHop[][]>();
  for (const path of collected) {
    const via = path.length > 1 ? path[1].id : "";
    if (!byVia.has(via)) {
      byVia.set(via, []);
      familyOrder.push(via);
    }
    byVia.get(via)!.push(path);
  }
  familyOrder.sort();
  return {
    nodeId: start,
    directDependents,
    families: familyOrder.map((via) => ({ via, paths: byVia.get(via)! })),
    totalPaths: total,
    shownPaths: collected.length,
    morePaths: Math.max(0, total - collected.length),
  };
}
