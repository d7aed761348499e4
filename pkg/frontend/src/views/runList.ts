// Run list: a read-only mirror of GET /runs with approval badges.

import type { RunSummary } from "../api.js";

export interface RunListHandlers {
  onOpen: (runId: string) => void;
}

const STATUS_CLASSES: Record<string, string> = {
  passed: "status-passed",
  failed: "status-failed",
  running: "status-running",
  "awaiting-approval": "status-awaiting",
  paused: "status-awaiting",
};

export function renderRunList(
  container: HTMLElement,
  runs: RunSummary[],
  handlers: RunListHandlers,
): void {
  container.replaceChildren();
  if (runs.length === 0) {
    const empty = document.createElement("div");
    empty.className = "empty-state";
    empty.textContent = "No runs yet. Start one with: labloop run --query ... --data ...";
    container.appendChild(empty);
    return;
  }
  const table = document.createElement("table");
  table.className = "run-table";
  const head = document.createElement("tr");
  for (const label of ["Run", "Status", "Query", "Iteration", ""]) {
    const th = document.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  table.appendChild(head);

  for (const run of runs) {
    const row = document.createElement("tr");
    row.dataset.runId = run.run_id;

    const idCell = document.createElement("td");
    idCell.className = "run-id";
    idCell.textContent = run.run_id;
    row.appendChild(idCell);

    const statusCell = document.createElement("td");
    const chip = document.createElement("span");
    chip.className = `status-chip ${STATUS_CLASSES[run.status] ?? ""}`;
    chip.textContent = run.status;
    statusCell.appendChild(chip);
    if (run.pending_approval) {
      const badge = document.createElement("span");
      badge.className = "approval-badge";
      badge.textContent = "needs review";
      statusCell.appendChild(badge);
    }
    row.appendChild(statusCell);

    const queryCell = document.createElement("td");
    queryCell.textContent = run.query;
    row.appendChild(queryCell);

    const iterationCell = document.createElement("td");
    iterationCell.textContent = String(run.iteration);
    row.appendChild(iterationCell);

    const openCell = document.createElement("td");
    const open = document.createElement("button");
    open.className = "open-run";
    open.textContent = "open";
    open.addEventListener("click", () => handlers.onOpen(run.run_id));
    openCell.appendChild(open);
    row.appendChild(openCell);

    table.appendChild(row);
  }
  container.appendChild(table);
}

export function renderConnectionBanner(container: HTMLElement, visible: boolean,
                                       retryInSeconds: number): void {
  let banner = container.querySelector<HTMLElement>(".connection-banner");
  if (!visible) {
    banner?.remove();
    return;
  }
  if (!banner) {
    banner = document.createElement("div");
    banner.className = "connection-banner";
    container.prepend(banner);
  }
  banner.textContent =
    `Cannot reach the service; retrying in ${retryInSeconds.toFixed(0)}s`;
}
