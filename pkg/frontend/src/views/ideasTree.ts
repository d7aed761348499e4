// Idea-search provenance tree: a generation-layered DAG rendered as SVG.
// Seeds sit on the left; improve/combine children hang off their parents,
// one column per generation, with the final winner highlighted.

interface IdeaNode {
  id: string;
  hypothesis: string;
  provenance: { kind: string; parents: string[]; dimension: string | null };
  generation: number;
}

interface SearchDoc {
  ideas?: Record<string, IdeaNode>;
  best?: string | null;
  generations?: Array<{ index: number | string; composite: Record<string, number> }>;
}

const SVG_NS = "http://www.w3.org/2000/svg";
const COLUMN_WIDTH = 180;
const ROW_HEIGHT = 46;
const MARGIN = 40;

export function renderIdeasTree(container: HTMLElement,
                                doc: Record<string, unknown> | null): void {
  container.replaceChildren();
  if (!doc || !doc.ideas) {
    const missing = document.createElement("p");
    missing.className = "artifact-missing";
    missing.textContent = "No idea-search record yet (ideation has not completed).";
    container.appendChild(missing);
    return;
  }
  const search = doc as unknown as SearchDoc;
  const ideas = Object.values(search.ideas ?? {});
  const byGeneration = new Map<number, IdeaNode[]>();
  for (const idea of ideas) {
    const bucket = byGeneration.get(idea.generation) ?? [];
    bucket.push(idea);
    byGeneration.set(idea.generation, bucket);
  }
  const generations = [...byGeneration.keys()].sort((a, b) => a - b);
  const positions = new Map<string, { x: number; y: number }>();
  let maxRows = 0;
  generations.forEach((generation, column) => {
    const bucket = (byGeneration.get(generation) ?? [])
      .sort((a, b) => a.id.localeCompare(b.id));
    maxRows = Math.max(maxRows, bucket.length);
    bucket.forEach((idea, row) => {
      positions.set(idea.id, {
        x: MARGIN + column * COLUMN_WIDTH,
        y: MARGIN + row * ROW_HEIGHT,
      });
    });
  });

  const width = MARGIN * 2 + Math.max(1, generations.length) * COLUMN_WIDTH;
  const height = MARGIN * 2 + Math.max(1, maxRows) * ROW_HEIGHT;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "ideas-tree");

  for (const idea of ideas) {
    const target = positions.get(idea.id);
    if (!target) continue;
    for (const parent of idea.provenance.parents) {
      const source = positions.get(parent);
      if (!source) continue;
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(source.x + 60));
      line.setAttribute("y1", String(source.y));
      line.setAttribute("x2", String(target.x - 60));
      line.setAttribute("y2", String(target.y));
      line.setAttribute("class", `edge edge-${idea.provenance.kind}`);
      svg.appendChild(line);
    }
  }

  for (const idea of ideas) {
    const where = positions.get(idea.id);
    if (!where) continue;
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("class",
      `idea-node kind-${idea.provenance.kind}` +
      (search.best === idea.id ? " best-idea" : ""));
    group.setAttribute("data-idea-id", idea.id);

    const box = document.createElementNS(SVG_NS, "rect");
    box.setAttribute("x", String(where.x - 60));
    box.setAttribute("y", String(where.y - 14));
    box.setAttribute("width", "120");
    box.setAttribute("height", "28");
    box.setAttribute("rx", "6");
    group.appendChild(box);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(where.x));
    label.setAttribute("y", String(where.y + 4));
    label.setAttribute("text-anchor", "middle");
    label.textContent = idea.id;
    group.appendChild(label);

    const tooltip = document.createElementNS(SVG_NS, "title");
    tooltip.textContent = `${idea.provenance.kind}`
      + (idea.provenance.dimension ? ` (${idea.provenance.dimension})` : "")
      + `\n${idea.hypothesis}`;
    group.appendChild(tooltip);

    svg.appendChild(group);
  }
  container.appendChild(svg);

  const legend = document.createElement("p");
  legend.className = "tree-legend";
  legend.textContent =
    "columns = generations; edges show improve/combine parentage; the winner is highlighted";
  container.appendChild(legend);
}
