// Hash-routed single-page app: run list at #/, run detail at #/runs/<id>.
// The list refreshes on a poll loop with backoff and a connection banner;
// an open run subscribes to its event stream and re-renders on changes.

import { ApiClient, ApiError } from "./api.js";
import type { FeedbackBundle, RunSummary, VerdictRequest } from "./api.js";
import { renderFeedbackView } from "./views/feedback.js";
import { renderIdeasTree } from "./views/ideasTree.js";
import { renderReportView } from "./views/report.js";
import { renderConnectionBanner, renderRunList } from "./views/runList.js";

const LIST_POLL_MS = 2_000;
const MAX_BACKOFF_MS = 30_000;
const EVENT_WAIT_SECONDS = 20;

type DetailTab = "feedback" | "report" | "ideas";

export class App {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private backoff = LIST_POLL_MS;
  private eventCursor = -1;
  private eventLoopRun: string | null = null;
  private activeTab: DetailTab = "feedback";

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
  ) {}

  start(): void {
    window.addEventListener("hashchange", () => void this.route());
    void this.route();
  }

  stop(): void {
    if (this.timer) clearTimeout(this.timer);
    this.eventLoopRun = null;
  }

  private currentRunId(): string | null {
    const match = window.location.hash.match(/^#\/runs\/([^/]+)/);
    return match ? match[1]! : null;
  }

  async route(): Promise<void> {
    if (this.timer) clearTimeout(this.timer);
    const runId = this.currentRunId();
    this.eventLoopRun = runId;
    if (runId) {
      await this.showRun(runId);
      void this.eventLoop(runId);
    } else {
      await this.refreshList();
    }
  }

  // -- run list ---------------------------------------------------------

  async refreshList(): Promise<void> {
    let runs: RunSummary[] | null = null;
    try {
      runs = await this.client.listRuns();
      this.backoff = LIST_POLL_MS;
    } catch {
      this.backoff = Math.min(this.backoff * 2, MAX_BACKOFF_MS);
    }
    if (this.currentRunId()) return; // navigated away mid-fetch
    let list = this.root.querySelector<HTMLElement>("#run-list");
    if (!list) {
      this.root.replaceChildren();
      const heading = document.createElement("h2");
      heading.textContent = "Pipeline runs";
      this.root.appendChild(heading);
      list = document.createElement("div");
      list.id = "run-list";
      this.root.appendChild(list);
    }
    renderConnectionBanner(this.root, runs === null, this.backoff / 1000);
    if (runs !== null) {
      renderRunList(list, runs, {
        onOpen: (id) => {
          window.location.hash = `#/runs/${id}`;
        },
      });
    }
    this.timer = setTimeout(() => void this.refreshList(), this.backoff);
  }

  // -- run detail ---------------------------------------------------------

  async showRun(runId: string): Promise<void> {
    this.root.replaceChildren();

    const back = document.createElement("a");
    back.href = "#/";
    back.textContent = "← all runs";
    back.className = "back-link";
    this.root.appendChild(back);

    const heading = document.createElement("h2");
    heading.id = "run-heading";
    this.root.appendChild(heading);

    const status = document.createElement("p");
    status.id = "run-status";
    this.root.appendChild(status);

    const nav = document.createElement("nav");
    nav.className = "detail-tabs";
    const body = document.createElement("div");
    body.id = "detail-body";
    for (const tab of ["feedback", "report", "ideas"] as DetailTab[]) {
      const button = document.createElement("button");
      button.dataset.tab = tab;
      button.textContent = tab;
      button.addEventListener("click", () => {
        this.activeTab = tab;
        void this.renderTab(runId, body);
        nav.querySelectorAll("button").forEach((b) =>
          b.classList.toggle("active", b.dataset.tab === tab));
      });
      nav.appendChild(button);
    }
    this.root.appendChild(nav);
    this.root.appendChild(body);

    await this.refreshRunHeader(runId);
    await this.renderTab(runId, body);
  }

  private async refreshRunHeader(runId: string): Promise<void> {
    const heading = this.root.querySelector<HTMLElement>("#run-heading");
    const status = this.root.querySelector<HTMLElement>("#run-status");
    if (!heading || !status) return;
    try {
      const detail = await this.client.runDetail(runId);
      heading.textContent = `${detail.run_id} — ${detail.query}`;
      status.textContent = `status: ${detail.status} (iteration ${detail.iteration})`;
      status.dataset.status = detail.status;
    } catch (error) {
      heading.textContent = runId;
      status.textContent = error instanceof ApiError && error.status === 404
        ? "run not found"
        : "cannot reach the service";
    }
  }

  private async renderTab(runId: string, body: HTMLElement): Promise<void> {
    if (this.activeTab === "feedback") {
      let bundle: FeedbackBundle;
      try {
        bundle = await this.client.feedback(runId);
      } catch {
        bundle = { pending: null, history: [] };
      }
      renderFeedbackView(body, bundle, {
        submit: (verdict: VerdictRequest) => this.client.submitVerdict(runId, verdict),
        links: { report: `#/runs/${runId}`, population: `#/runs/${runId}` },
        onDecided: () => void this.refreshRunHeader(runId),
      });
    } else if (this.activeTab === "report") {
      let doc: Record<string, unknown> | null = null;
      try {
        doc = await this.client.report(runId);
      } catch {
        doc = null;
      }
      renderReportView(body, doc);
    } else {
      let doc: Record<string, unknown> | null = null;
      try {
        doc = await this.client.population(runId);
      } catch {
        doc = null;
      }
      renderIdeasTree(body, doc);
    }
  }

  // -- events ----------------------------------------------------------------

  private async eventLoop(runId: string): Promise<void> {
    this.eventCursor = -1;
    while (this.eventLoopRun === runId) {
      try {
        const batch = await this.client.events(runId, this.eventCursor,
                                               EVENT_WAIT_SECONDS);
        if (this.eventLoopRun !== runId) return;
        if (batch.events.length > 0) {
          this.eventCursor = batch.next_after;
          await this.refreshRunHeader(runId);
          const body = this.root.querySelector<HTMLElement>("#detail-body");
          if (body) await this.renderTab(runId, body);
        }
      } catch {
        await new Promise((resolve) => setTimeout(resolve, 2_000));
      }
    }
  }
}

export function mountApp(root: HTMLElement, client: ApiClient = new ApiClient()): App {
  const app = new App(root, client);
  app.start();
  return app;
}
