/** Schema types for gridlens-export/1 documents and their validation. */

export const EXPORT_VERSION = "gridlens-export/1";

export type NodeKind = "input" | "formula" | "kpi" | "range-aggregate";

export interface ExportNode {
  id: string;
  kind: NodeKind;
  sheet: string;
  discipline: string;
  label?: string;
  value?: number | string | boolean | null | { error: string };
  formulaText?: string;
  memberCount?: number;
}

export interface ExportEdge {
  /** Dataflow orientation: `from` feeds `to`. */
  from: string;
  to: string;
}

export interface DisciplineMetricsEntry {
  discipline: string;
  cellCount: number;
  inputCount: number;
  pctInputs: number;
  avgValency: number;
}

export interface ExportMeta {
  kpis: string[];
  cellCount: number;
  expandedReferenceCount: number;
  disciplineMetrics?: DisciplineMetricsEntry[];
  couplingMatrix?: {
    disciplines: string[];
    direct: number[][];
    indirect: boolean[][];
  };
}

export interface GraphExportDoc {
  version: string;
  nodes: ExportNode[];
  edges: ExportEdge[];
  meta: ExportMeta;
}

/** Raised for documents the explorer cannot load; shown as a banner. */
export class SchemaMismatchError extends Error {}

const NODE_KINDS: ReadonlySet<string> = new Set([
  "input",
  "formula",
  "kpi",
  "range-aggregate",
]);

function fail(message: string): never {
  throw new SchemaMismatchError(message);
}

/** Validate an untrusted parsed JSON document into a GraphExportDoc. */
export function validateExport(raw: unknown): GraphExportDoc {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    fail("export must be a JSON object");
  }
  const doc = raw as Record<string, unknown>;
  if (doc.version !== EXPORT_VERSION) {
    fail(`unsupported export version ${JSON.stringify(doc.version)}; expected ${EXPORT_VERSION}`);
  }
  if (!Array.isArray(doc.nodes) || !Array.isArray(doc.edges)) {
    fail("export needs 'nodes' and 'edges' arrays");
  }
  const ids = new Set<string>();
  for (const node of doc.nodes as unknown[]) {
    const n = node as Partial<ExportNode>;
    if (typeof n.id !== "string" || n.id === "") fail("every node needs a string id");
    if (typeof n.kind !== "string" || !NODE_KINDS.has(n.kind)) {
      fail(`node ${n.id}: unknown kind ${JSON.stringify(n.kind)}`);
    }
    if (typeof n.sheet !== "string" || typeof n.discipline !== "string") {
      fail(`node ${n.id}: sheet and discipline are required`);
    }
    if (ids.has(n.id)) fail(`duplicate node id ${n.id}`);
    ids.add(n.id);
  }
  for (const edge of doc.edges as unknown[]) {
    const e = edge as Partial<ExportEdge>;
    if (typeof e.from !== "string" || typeof e.to !== "string") {
      fail("every edge needs string 'from' and 'to'");
    }
    if (!ids.has(e.from) || !ids.has(e.to)) {
      fail(`edge ${e.from} -> ${e.to} references an undeclared node`);
    }
  }
  const meta = (doc.meta ?? {}) as Partial<ExportMeta>;
  if (!Array.isArray(meta.kpis)) fail("meta.kpis must list the KPI node ids");
  return raw as GraphExportDoc;
}

/** Short human name for a node: label if present, else its id. */
export function displayName(node: ExportNode): string {
  return node.label ? `${node.label} (${node.id})` : node.id;
}
