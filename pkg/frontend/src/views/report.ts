// Data-report browser: four tabs mirroring the report's four parts.

interface ReportDoc {
  dataset_digest?: string;
  structure?: Array<{
    leaf: string;
    format: string;
    schema: { fields: Array<{ name: string; semantic_type: string }>; row_count: number | null };
    stats: { fields: Array<Record<string, unknown>>; sampled: boolean };
  }>;
  unparsable?: Record<string, string>;
  quality?: Array<{
    field_id: string;
    missing_rate: number;
    outlier_mass: number;
    violations: Array<[string, number]>;
  }>;
  semantics?: Array<{
    field_id: string;
    role: string;
    confidence: number;
    source: string;
  }>;
  dependency?: { nodes: string[]; edges: Array<{ a: string; b: string; kind: string; strength: number }> };
}

const TABS = ["structure", "quality", "semantics", "dependency"] as const;
type Tab = (typeof TABS)[number];

function simpleTable(headers: string[], rows: string[][]): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "report-table";
  const head = document.createElement("tr");
  for (const header of headers) {
    const th = document.createElement("th");
    th.textContent = header;
    head.appendChild(th);
  }
  table.appendChild(head);
  for (const cells of rows) {
    const row = document.createElement("tr");
    for (const cell of cells) {
      const td = document.createElement("td");
      td.textContent = cell;
      row.appendChild(td);
    }
    table.appendChild(row);
  }
  return table;
}

function renderTab(doc: ReportDoc, tab: Tab): HTMLElement {
  const pane = document.createElement("div");
  pane.className = `report-pane pane-${tab}`;
  if (tab === "structure") {
    const rows = (doc.structure ?? []).map((entry) => [
      entry.leaf,
      entry.format,
      entry.schema.row_count === null ? "-" : String(entry.schema.row_count),
      entry.schema.fields.map((f) => `${f.name}:${f.semantic_type}`).join(", "),
    ]);
    pane.appendChild(simpleTable(["Leaf", "Format", "Rows", "Fields"], rows));
    for (const [leaf, reason] of Object.entries(doc.unparsable ?? {})) {
      const warn = document.createElement("p");
      warn.className = "unparsable";
      warn.textContent = `${leaf}: unparsable (${reason})`;
      pane.appendChild(warn);
    }
  } else if (tab === "quality") {
    const rows = (doc.quality ?? []).map((entry) => [
      entry.field_id,
      String(entry.missing_rate),
      String(entry.outlier_mass),
      entry.violations.map(([rule, count]) => `${rule}: ${count}`).join("; ") || "-",
    ]);
    pane.appendChild(simpleTable(
      ["Field", "Missing rate", "Outlier mass", "Violations"], rows));
  } else if (tab === "semantics") {
    const rows = (doc.semantics ?? []).map((binding) => [
      binding.field_id,
      binding.role,
      String(binding.confidence),
      binding.source,
    ]);
    pane.appendChild(simpleTable(["Field", "Role", "Confidence", "Source"], rows));
  } else {
    const rows = (doc.dependency?.edges ?? []).map((edge) => [
      edge.a,
      edge.b,
      edge.kind,
      String(edge.strength),
    ]);
    pane.appendChild(simpleTable(["Field A", "Field B", "Kind", "Strength"], rows));
    if (rows.length === 0) {
      const none = document.createElement("p");
      none.textContent = "No dependency edges found.";
      pane.appendChild(none);
    }
  }
  return pane;
}

export function renderReportView(container: HTMLElement,
                                 doc: Record<string, unknown> | null): void {
  container.replaceChildren();
  if (!doc) {
    const missing = document.createElement("p");
    missing.className = "artifact-missing";
    missing.textContent = "No data report yet (the data stage has not completed).";
    container.appendChild(missing);
    return;
  }
  const report = doc as ReportDoc;
  const nav = document.createElement("nav");
  nav.className = "report-tabs";
  const body = document.createElement("div");
  body.className = "report-body";

  const select = (tab: Tab) => {
    body.replaceChildren(renderTab(report, tab));
    nav.querySelectorAll("button").forEach((button) => {
      button.classList.toggle("active", button.dataset.tab === tab);
    });
  };

  for (const tab of TABS) {
    const button = document.createElement("button");
    button.dataset.tab = tab;
    button.textContent = tab;
    button.addEventListener("click", () => select(tab));
    nav.appendChild(button);
  }
  container.appendChild(nav);
  container.appendChild(body);
  select("structure");
}
