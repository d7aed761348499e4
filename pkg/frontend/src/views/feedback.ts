// Feedback review: the human side of the approval gate.
//
// Renders the critic's three axis rows exactly as the API sent them (raw
// values are kept on data attributes; the two-decimal formatting is display
// only), collects a verdict through a confirm modal, and submits it with an
// optimistic state that rolls back on conflict.  Nothing here computes a
// verdict or a score.

import type {
  Feedback,
  FeedbackBundle,
  VerdictRequest,
  VerdictResponse,
} from "../api.js";
import { ApiError } from "../api.js";

// Presentation hint only: rows under this confidence get highlighted so
// reviewers see what dragged the provisional verdict down.
const LOW_CONFIDENCE_HINT = 0.5;

export interface ArtifactLinks {
  report?: string;
  population?: string;
}

export interface FeedbackViewDeps {
  submit: (body: VerdictRequest) => Promise<VerdictResponse>;
  links?: ArtifactLinks;
  onDecided?: (response: VerdictResponse) => void;
}

export function formatConfidence(value: number): string {
  return value.toFixed(2);
}

function axisTable(feedback: Feedback): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "axis-table";
  const head = document.createElement("tr");
  for (const label of ["Axis", "Confidence", "Patch instruction"]) {
    const th = document.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  table.appendChild(head);
  for (const axis of feedback.axes) {
    const row = document.createElement("tr");
    row.className = "axis-row";
    if (axis.confidence < LOW_CONFIDENCE_HINT) row.classList.add("below-threshold");

    const name = document.createElement("td");
    name.className = "axis-name";
    name.textContent = axis.axis;
    row.appendChild(name);

    const confidence = document.createElement("td");
    confidence.className = "axis-confidence";
    confidence.textContent = formatConfidence(axis.confidence);
    // the payload-exact value never gets rounded into state
    confidence.dataset.confidence = String(axis.confidence);
    confidence.title = String(axis.confidence);
    row.appendChild(confidence);

    const instruction = document.createElement("td");
    instruction.className = "axis-instruction";
    instruction.textContent = axis.instruction;
    row.appendChild(instruction);

    table.appendChild(row);
  }
  return table;
}

function artifactLink(label: string, href: string | undefined): HTMLElement {
  if (href) {
    const anchor = document.createElement("a");
    anchor.className = "artifact-link";
    anchor.href = href;
    anchor.textContent = label;
    return anchor;
  }
  const placeholder = document.createElement("span");
  placeholder.className = "artifact-missing";
  placeholder.textContent = `${label} unavailable (artifact not produced yet)`;
  return placeholder;
}

function confirmModal(
  verdict: "PASS" | "REVISE",
  reviewer: string,
  onConfirm: () => void,
  onCancel: () => void,
): HTMLElement {
  const overlay = document.createElement("div");
  overlay.className = "modal-overlay";
  const modal = document.createElement("div");
  modal.className = "modal";
  const text = document.createElement("p");
  text.textContent = `Commit verdict ${verdict} as ${reviewer}? This steers the running pipeline.`;
  modal.appendChild(text);

  const confirm = document.createElement("button");
  confirm.className = "modal-confirm";
  confirm.textContent = `Commit ${verdict}`;
  confirm.addEventListener("click", onConfirm);
  modal.appendChild(confirm);

  const cancel = document.createElement("button");
  cancel.className = "modal-cancel";
  cancel.textContent = "Cancel";
  cancel.addEventListener("click", onCancel);
  modal.appendChild(cancel);

  overlay.appendChild(modal);
  return overlay;
}

function historySection(bundle: FeedbackBundle): HTMLElement {
  const section = document.createElement("section");
  section.className = "feedback-history";
  const heading = document.createElement("h3");
  heading.textContent = bundle.history.length
    ? "Iteration history"
    : "No iterations recorded yet";
  section.appendChild(heading);
  for (const iteration of bundle.history) {
    const card = document.createElement("div");
    card.className = "history-card";
    const title = document.createElement("h4");
    const approval = iteration.approval as { verdict?: string; reviewer?: string };
    title.textContent = `Iteration ${iteration.index}: ${approval.verdict ?? "?"}`
      + (approval.reviewer ? ` (by ${approval.reviewer})` : "");
    card.appendChild(title);
    const stages = document.createElement("p");
    stages.className = "stages-run";
    stages.textContent = `stages run: ${iteration.stages_run.join(", ")}`;
    card.appendChild(stages);
    card.appendChild(axisTable(iteration.feedback));
    section.appendChild(card);
  }
  return section;
}

export function renderFeedbackView(
  container: HTMLElement,
  bundle: FeedbackBundle,
  deps: FeedbackViewDeps,
): void {
  container.replaceChildren();

  if (!bundle.pending) {
    const note = document.createElement("p");
    note.className = "readonly-note";
    note.textContent = "Nothing awaiting approval; showing history read-only.";
    container.appendChild(note);
    container.appendChild(historySection(bundle));
    return;
  }

  const card = document.createElement("section");
  card.className = "pending-card";

  const heading = document.createElement("h3");
  heading.textContent = `Iteration ${bundle.pending.iteration} awaits your verdict`;
  card.appendChild(heading);

  const provisional = document.createElement("p");
  provisional.className = "provisional-verdict";
  provisional.textContent = `Critic's provisional verdict: ${bundle.pending.feedback.verdict}`;
  card.appendChild(provisional);

  card.appendChild(axisTable(bundle.pending.feedback));

  const links = document.createElement("p");
  links.className = "artifact-links";
  links.appendChild(artifactLink("data report", deps.links?.report));
  links.appendChild(document.createTextNode(" · "));
  links.appendChild(artifactLink("idea search", deps.links?.population));
  card.appendChild(links);

  const form = document.createElement("div");
  form.className = "verdict-form";

  const reviewer = document.createElement("input");
  reviewer.className = "reviewer-input";
  reviewer.placeholder = "your name";
  form.appendChild(reviewer);

  const note = document.createElement("textarea");
  note.className = "note-input";
  note.placeholder = "optional note";
  form.appendChild(note);

  const message = document.createElement("p");
  message.className = "submit-message";

  let inFlight = false;

  const submitVerdict = (verdict: "PASS" | "REVISE") => {
    if (inFlight) return;
    const body: VerdictRequest = {
      verdict,
      reviewer: reviewer.value.trim(),
      note: note.value,
    };
    inFlight = true;
    // optimistic: the form yields to a committing chip immediately
    form.classList.add("hidden");
    message.textContent = `Committing ${verdict}…`;
    message.className = "submit-message committing";
    deps.submit(body).then(
      (response) => {
        inFlight = false;
        message.textContent =
          `Verdict ${response.verdict} committed by ${response.reviewer}.`;
        message.className = "submit-message committed";
        deps.onDecided?.(response);
      },
      (error: unknown) => {
        inFlight = false;
        form.classList.remove("hidden"); // rollback: the decision is not ours
        if (error instanceof ApiError && error.status === 409) {
          message.textContent = `Already decided elsewhere: ${error.message}`;
          message.className = "submit-message conflict";
        } else {
          message.textContent =
            "Could not reach the service; your verdict is kept below.";
          message.className = "submit-message network-error";
          const retry = document.createElement("button");
          retry.className = "retry-submit";
          retry.textContent = `Retry ${verdict}`;
          retry.addEventListener("click", () => {
            retry.remove();
            submitVerdict(verdict);
          });
          message.appendChild(document.createTextNode(" "));
          message.appendChild(retry);
        }
      },
    );
  };

  const withConfirmation = (verdict: "PASS" | "REVISE") => {
    if (inFlight || card.querySelector(".modal-overlay")) return;
    if (!reviewer.value.trim()) {
      message.textContent = "Enter your reviewer name first.";
      message.className = "submit-message needs-reviewer";
      return;
    }
    const overlay = confirmModal(
      verdict,
      reviewer.value.trim(),
      () => {
        overlay.remove();
        submitVerdict(verdict);
      },
      () => overlay.remove(),
    );
    card.appendChild(overlay);
  };

  const passButton = document.createElement("button");
  passButton.className = "verdict-pass";
  passButton.textContent = "PASS";
  passButton.addEventListener("click", () => withConfirmation("PASS"));
  form.appendChild(passButton);

  const reviseButton = document.createElement("button");
  reviseButton.className = "verdict-revise";
  reviseButton.textContent = "REVISE";
  reviseButton.addEventListener("click", () => withConfirmation("REVISE"));
  form.appendChild(reviseButton);

  card.appendChild(form);
  card.appendChild(message);
  container.appendChild(card);
  container.appendChild(historySection(bundle));
}
