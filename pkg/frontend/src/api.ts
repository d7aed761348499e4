// Typed client for the pipeline approval API. The UI is a pure view/commit
// client: it renders what the server sends and never computes verdicts or
// scores itself.

export interface RunSummary {
  run_id: string;
  status: string;
  query: string;
  iteration: number;
  pending_approval: boolean;
  updated_at: number;
}

export interface RunDetail extends RunSummary {
  dataset_root: string;
  seed: number;
  error: string | null;
  iterations: Record<string, unknown>[];
}

export interface AxisFeedback {
  axis: string;
  confidence: number;
  instruction: string;
}

export interface Feedback {
  verdict: string;
  axes: AxisFeedback[];
}

export interface PendingApproval {
  iteration: number;
  feedback: Feedback;
}

export interface IterationRecord {
  index: number;
  stages_run: string[];
  feedback: Feedback;
  approval: Record<string, unknown>;
}

export interface FeedbackBundle {
  pending: PendingApproval | null;
  history: IterationRecord[];
}

export interface VerdictRequest {
  verdict: "PASS" | "REVISE";
  reviewer: string;
  note: string;
}

export interface VerdictResponse {
  run_id: string;
  iteration: number;
  verdict: string;
  reviewer: string;
  note: string;
}

export interface RunEvent {
  seq: number;
  at: number;
  kind: string;
  data: Record<string, unknown>;
}

export interface EventBatch {
  events: RunEvent[];
  next_after: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(private base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path, {
      headers: { accept: "application/json" },
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  listRuns(): Promise<RunSummary[]> {
    return this.get("/runs");
  }

  runDetail(runId: string): Promise<RunDetail> {
    return this.get(`/runs/${runId}`);
  }

  feedback(runId: string): Promise<FeedbackBundle> {
    return this.get(`/runs/${runId}/feedback`);
  }

  report(runId: string): Promise<Record<string, unknown>> {
    return this.get(`/runs/${runId}/report`);
  }

  population(runId: string): Promise<Record<string, unknown>> {
    return this.get(`/runs/${runId}/population`);
  }

  events(runId: string, after: number, wait = 0): Promise<EventBatch> {
    return this.get(`/runs/${runId}/events?after=${after}&wait=${wait}`);
  }

  async submitVerdict(runId: string, body: VerdictRequest): Promise<VerdictResponse> {
    const response = await fetch(`${this.base}/runs/${runId}/verdict`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as VerdictResponse;
  }
}
