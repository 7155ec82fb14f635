/** Export-document builders shared by the explorer's test suites. */

import { ExportEdge, ExportNode, GraphExportDoc } from "../src/types.js";

export function makeExport(
  nodes: Array<Partial<ExportNode> & { id: string }>,
  edges: Array<[string, string]>,
  kpis: string[],
): GraphExportDoc {
  const fullNodes: ExportNode[] = nodes.map((n) => ({
    kind: kpis.includes(n.id) ? "kpi" : "formula",
    sheet: n.id.split("!")[0] ?? "S",
    discipline: n.discipline ?? n.id.split("!")[0] ?? "S",
    ...n,
  } as ExportNode));
  const fullEdges: ExportEdge[] = edges.map(([from, to]) => ({ from, to }));
  return {
    version: "gridlens-export/1",
    nodes: fullNodes,
    edges: fullEdges,
    meta: {
      kpis,
      cellCount: fullNodes.length,
      expandedReferenceCount: fullEdges.length,
    },
  };
}

/** Diamond chain: `stages` two-way splits re-joining, then a tail chain to
 * the KPI. Paths from the source multiply by 2 per stage. */
export function diamondChain(stages: number, tailLength: number): {
  doc: GraphExportDoc;
  source: string;
  kpi: string;
} {
  const nodes: Array<{ id: string }> = [{ id: "S!J0" }];
  const edges: Array<[string, string]> = [];
  let prev = "S!J0";
  for (let s = 1; s <= stages; s++) {
    const p = `S!P${s}`;
    const q = `S!Q${s}`;
    const j = `S!J${s}`;
    nodes.push({ id: p }, { id: q }, { id: j });
    edges.push([prev, p], [prev, q], [p, j], [q, j]);
    prev = j;
  }
  for (let t = 1; t <= tailLength; t++) {
    const id = `S!T${t}`;
    nodes.push({ id });
    edges.push([prev, id]);
    prev = id;
  }
  const kpi = "S!KPI";
  nodes.push({ id: kpi });
  edges.push([prev, kpi]);
  return { doc: makeExport(nodes, edges, [kpi]), source: "S!J0", kpi };
}

/** One shared input feeding two separate calculation clusters that both
 * reach the KPI: the classic unexpected-coupling scenario. */
export function twoClusterAnomaly(): {
  doc: GraphExportDoc;
  shared: string;
  kpi: string;
} {
  const nodes: Array<{ id: string; discipline?: string }> = [
    { id: "In!C1", discipline: "Inputs" },
    { id: "A!A1", discipline: "ClusterA" },
    { id: "A!A2", discipline: "ClusterA" },
    { id: "A!A3", discipline: "ClusterA" },
    { id: "B!B1", discipline: "ClusterB" },
    { id: "B!B2", discipline: "ClusterB" },
    { id: "B!B3", discipline: "ClusterB" },
    { id: "Out!K1", discipline: "Outputs" },
  ];
  const edges: Array<[string, string]> = [
    ["In!C1", "A!A1"],
    ["A!A1", "A!A2"],
    ["A!A2", "A!A3"],
    ["A!A3", "Out!K1"],
    ["In!C1", "B!B1"],
    ["B!B1", "B!B2"],
    ["B!B2", "B!B3"],
    ["B!B3", "Out!K1"],
  ];
  return { doc: makeExport(nodes, edges, ["Out!K1"]), shared: "In!C1", kpi: "Out!K1" };
}

/** `clusters` star clusters of `size` nodes whose heads all feed one
 * central KPI node (the shape that force layout should separate). */
export function clusteredExport(clusters: number, size: number): {
  doc: GraphExportDoc;
  memberships: Map<string, number>;
  kpi: string;
} {
  const nodes: Array<{ id: string; discipline?: string }> = [];
  const edges: Array<[string, string]> = [];
  const memberships = new Map<string, number>();
  const kpi = "Hub!K1";
  for (let c = 0; c < clusters; c++) {
    const head = `C${c}!H`;
    nodes.push({ id: head, discipline: `C${c}` });
    memberships.set(head, c);
    for (let m = 0; m < size - 1; m++) {
      const id = `C${c}!M${m}`;
      nodes.push({ id, discipline: `C${c}` });
      memberships.set(id, c);
      edges.push([id, head]);
      if (m > 0) edges.push([`C${c}!M${m - 1}`, id]); // ring-ish internal ties
    }
    edges.push([head, kpi]);
  }
  nodes.push({ id: kpi, discipline: "Hub" });
  return { doc: makeExport(nodes, edges, [kpi]), memberships, kpi };
}
