/** View state: loaded export, palette, layout positions, selection, filters. */

import { ForceSimulation, layeredLayout, Point } from "./layout.js";
import { tracePaths, UsageTrace } from "./paths.js";
import { ExportNode, GraphExportDoc, validateExport } from "./types.js";

export type LayoutMode = "force-linlog" | "layered-by-depth";

export interface Filters {
  hiddenDisciplines: ReadonlySet<string>;
  search: string;
}

export const NO_FILTERS: Filters = { hiddenDisciplines: new Set(), search: "" };

/** Discipline colours: stable assignment by discipline order in meta. */
const PALETTE = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
  "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
];

export class ViewState {
  readonly doc: GraphExportDoc;
  readonly nodesById = new Map<string, ExportNode>();
  /** Dataflow adjacency: id -> nodes it feeds. */
  readonly dependents = new Map<string, string[]>();
  /** Reverse adjacency: id -> nodes feeding it. */
  readonly precedents = new Map<string, string[]>();
  readonly kpis: ReadonlySet<string>;
  readonly disciplines: string[];
  readonly colors = new Map<string, string>();
  readonly seed: number;

  positions = new Map<string, Point>();
  layoutMode: LayoutMode = "force-linlog";
  selection: string | null = null;
  filters: Filters = NO_FILTERS;

  private simulation: ForceSimulation | null = null;

  constructor(doc: GraphExportDoc, seed: number) {
    this.doc = doc;
    this.seed = seed;
    for (const node of doc.nodes) {
      this.nodesById.set(node.id, node);
      this.dependents.set(node.id, []);
      this.precedents.set(node.id, []);
    }
    for (const edge of doc.edges) {
      this.dependents.get(edge.from)!.push(edge.to);
      this.precedents.get(edge.to)!.push(edge.from);
    }
    this.kpis = new Set(doc.meta.kpis.filter((id) => this.nodesById.has(id)));

    const order: string[] = [];
    for (const entry of doc.meta.disciplineMetrics ?? []) {
      if (!order.includes(entry.discipline)) order.push(entry.discipline);
    }
    for (const node of doc.nodes) {
      if (!order.includes(node.discipline)) order.push(node.discipline);
    }
    this.disciplines = order;
    order.forEach((d, i) => this.colors.set(d, PALETTE[i % PALETTE.length]));
  }

  colorOf(node: ExportNode): string {
    return this.colors.get(node.discipline) ?? "#888";
  }

  edgePairs(): Array<[string, string]> {
    return this.doc.edges.map((e) => [e.from, e.to]);
  }

  /** (Re)start the force simulation; run() advances it in slices. */
  startForceLayout(): ForceSimulation {
    this.layoutMode = "force-linlog";
    this.simulation = new ForceSimulation(
      [...this.nodesById.keys()],
      this.edgePairs(),
      this.seed,
    );
    this.positions = this.simulation.positions();
    return this.simulation;
  }

  /** Advance the active force layout; returns false when no sim is active. */
  stepLayout(iterations: number): boolean {
    if (this.layoutMode !== "force-linlog" || this.simulation === null) return false;
    this.simulation.run(iterations);
    this.positions = this.simulation.positions();
    return true;
  }

  applyLayeredLayout(): void {
    this.layoutMode = "layered-by-depth";
    this.simulation = null;
    this.positions = layeredLayout([...this.nodesById.keys()], this.edgePairs());
  }

  isVisible = (id: string): boolean => {
    const node = this.nodesById.get(id);
    return node !== undefined && !this.filters.hiddenDisciplines.has(node.discipline);
  };

  visibleNodeIds(): string[] {
    return [...this.nodesById.keys()].filter(this.isVisible);
  }

  /** Edges among visible nodes plus stubs where one endpoint is hidden. */
  visibleEdges(): { full: Array<[string, string]>; stubs: Array<[string, string]> } {
    const full: Array<[string, string]> = [];
    const stubs: Array<[string, string]> = [];
    for (const e of this.doc.edges) {
      const a = this.isVisible(e.from);
      const b = this.isVisible(e.to);
      if (a && b) full.push([e.from, e.to]);
      else if (a || b) stubs.push([e.from, e.to]);
    }
    return { full, stubs };
  }

  /** Node ids whose label or id matches the search string. */
  searchMatches(): Set<string> {
    const needle = this.filters.search.trim().toLowerCase();
    const out = new Set<string>();
    if (!needle) return out;
    for (const node of this.doc.nodes) {
      if (!this.isVisible(node.id)) continue;
      if (
        node.id.toLowerCase().includes(needle) ||
        (node.label ?? "").toLowerCase().includes(needle)
      ) {
        out.add(node.id);
      }
    }
    return out;
  }

  setFilters(update: Partial<Filters>): this {
    this.filters = {
      hiddenDisciplines: update.hiddenDisciplines ?? this.filters.hiddenDisciplines,
      search: update.search ?? this.filters.search,
    };
    if (this.selection !== null && !this.isVisible(this.selection)) {
      this.selection = null;
    }
    return this;
  }

  clearFilters(): this {
    this.filters = NO_FILTERS;
    return this;
  }

  /** Select a visible node and build its usage trace panel content. */
  selectNode(id: string): UsageTrace | null {
    if (!this.isVisible(id)) return null;
    this.selection = id;
    return tracePaths(this.nodesById, this.dependents, this.kpis, id, this.isVisible);
  }
}

/** Parse, validate, palette, and lay out an export document. */
export function loadExport(
  raw: unknown,
  seed = 42,
  layoutIterations = 200,
): ViewState {
  const doc = validateExport(typeof raw === "string" ? JSON.parse(raw) : raw);
  const state = new ViewState(doc, seed);
  state.startForceLayout();
  state.stepLayout(layoutIterations);
  return state;
}
