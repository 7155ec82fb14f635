/** App bootstrap: file loading, layout loop, selection panel, filters. */

import { draw, fitViewport, hitTest, Viewport } from "./render.js";
import { loadExport, ViewState } from "./state.js";
import { displayName, SchemaMismatchError } from "./types.js";
import { UsageTrace } from "./paths.js";

const LAYOUT_SLICE = 4; // iterations per animation frame: keeps input responsive
const LAYOUT_TOTAL = 600;

class App {
  private state: ViewState | null = null;
  private viewport: Viewport = { offsetX: 0, offsetY: 0, zoom: 1 };
  private iterationsLeft = 0;

  private readonly canvas = document.getElementById("graph") as HTMLCanvasElement;
  private readonly ctx = this.canvas.getContext("2d")!;
  private readonly banner = document.getElementById("banner")!;
  private readonly panel = document.getElementById("panel")!;
  private readonly legend = document.getElementById("legend")!;
  private readonly fileInput = document.getElementById("file") as HTMLInputElement;
  private readonly searchInput = document.getElementById("search") as HTMLInputElement;
  private readonly modeSelect = document.getElementById("mode") as HTMLSelectElement;

  constructor() {
    this.fileInput.addEventListener("change", () => void this.onFile());
    this.searchInput.addEventListener("input", () => {
      this.state?.setFilters({ search: this.searchInput.value });
      this.redraw();
    });
    this.modeSelect.addEventListener("change", () => this.onMode());
    this.canvas.addEventListener("click", (ev) => this.onClick(ev));
    window.addEventListener("resize", () => this.resize());
    this.resize();
    requestAnimationFrame(() => this.tick());
  }

  private resize() {
    this.canvas.width = this.canvas.clientWidth;
    this.canvas.height = this.canvas.clientHeight;
    this.redraw();
  }

  private async onFile() {
    const file = this.fileInput.files?.[0];
    if (!file) return;
    this.banner.textContent = "";
    this.banner.classList.remove("visible");
    try {
      const text = await file.text();
      this.state = loadExport(text, 42, 0);
      this.iterationsLeft = LAYOUT_TOTAL;
      this.buildLegend();
      this.panel.innerHTML = "<p>Select a node to trace how it feeds the KPIs.</p>";
    } catch (err) {
      this.state = null;
      const reason =
        err instanceof SchemaMismatchError
          ? err.message
          : err instanceof SyntaxError
            ? `not valid JSON: ${err.message}`
            : String(err);
      this.banner.textContent = `Cannot load document: ${reason}`;
      this.banner.classList.add("visible");
    }
    this.redraw();
  }

  private onMode() {
    if (!this.state) return;
    if (this.modeSelect.value === "layered-by-depth") {
      this.state.applyLayeredLayout();
      this.iterationsLeft = 0;
    } else {
      this.state.startForceLayout();
      this.iterationsLeft = LAYOUT_TOTAL;
    }
    this.redraw();
  }

  private onClick(ev: MouseEvent) {
    if (!this.state) return;
    const rect = this.canvas.getBoundingClientRect();
    const id = hitTest(this.state, this.viewport, ev.clientX - rect.left, ev.clientY - rect.top);
    if (id === null) return;
    const trace = this.state.selectNode(id);
    if (trace) this.renderTrace(trace);
    this.redraw();
  }

  private buildLegend() {
    this.legend.innerHTML = "";
    if (!this.state) return;
    for (const discipline of this.state.disciplines) {
      const row = document.createElement("label");
      row.className = "legend-row";
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = true;
      box.addEventListener("change", () => {
        if (!this.state) return;
        const hidden = new Set(this.state.filters.hiddenDisciplines);
        if (box.checked) hidden.delete(discipline);
        else hidden.add(discipline);
        this.state.setFilters({ hiddenDisciplines: hidden });
        this.redraw();
      });
      const swatch = document.createElement("span");
      swatch.className = "swatch";
      swatch.style.background = this.state.colors.get(discipline) ?? "#888";
      row.append(box, swatch, document.createTextNode(discipline));
      this.legend.append(row);
    }
  }

  private renderTrace(trace: UsageTrace) {
    if (!this.state) return;
    const node = this.state.nodesById.get(trace.nodeId)!;
    const parts: string[] = [];
    parts.push(`<h2>${escapeHtml(displayName(node))}</h2>`);
    if (node.formulaText) {
      parts.push(`<code class="formula">${escapeHtml(node.formulaText)}</code>`);
    }
    parts.push(`<h3>Direct dependents (${trace.directDependents.length})</h3>`);
    parts.push(
      "<ul>" +
        trace.directDependents
          .map((id) => `<li>${escapeHtml(this.name(id))}</li>`)
          .join("") +
        "</ul>",
    );
    parts.push(`<h3>Paths to KPIs (${trace.totalPaths})</h3>`);
    for (const family of trace.families) {
      const viaName = family.via === "" ? "itself" : this.name(family.via);
      parts.push(`<h4>via ${escapeHtml(viaName)} (${family.paths.length})</h4>`);
      for (const path of family.paths) {
        const crumbs = path
          .map((hop) => {
            const title = hop.formulaText ? ` title="${escapeHtml(hop.formulaText)}"` : "";
            return `<span class="crumb"${title}>${escapeHtml(hop.label ?? hop.id)}</span>`;
          })
          .join(" &rarr; ");
        parts.push(`<div class="path">${crumbs}</div>`);
      }
    }
    if (trace.morePaths > 0) {
      parts.push(`<p class="more">${trace.morePaths} more…</p>`);
    }
    this.panel.innerHTML = parts.join("\n");
  }

  private name(id: string): string {
    const node = this.state?.nodesById.get(id);
    return node ? displayName(node) : id;
  }

  private tick() {
    if (this.state && this.iterationsLeft > 0) {
      this.state.stepLayout(LAYOUT_SLICE);
      this.iterationsLeft -= LAYOUT_SLICE;
      this.redraw();
    }
    requestAnimationFrame(() => this.tick());
  }

  private redraw() {
    if (!this.state) {
      this.ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
      return;
    }
    this.viewport = fitViewport(this.state, this.canvas.width, this.canvas.height);
    draw(this.ctx, this.state, this.viewport, this.canvas.width, this.canvas.height);
  }
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

new App();
