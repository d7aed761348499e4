"""End-to-end pipeline: (dataset, query) -> ideas, report, codebase, results.

The revision cycle drives three stage executors (ideation, data analysis,
experiment) whose artifacts are persisted the moment they exist; the cycle
state is persisted after every stage/phase, so a killed process resumes
without repeating completed work.  With the mock provider and a fixed seed
the whole run is deterministic, artifact for artifact.
"""

from __future__ import annotations

import hashlib
import logging
from pathlib import Path

import yaml

from ..critic.approval import approve
from ..critic.cycle import CycleResult, CycleState, revision_cycle
from ..critic.feedback import Feedback, critique
from ..errors import AwaitingApproval, LabloopError
from ..experiment.executor import execute
from ..experiment.loop import coding_loop, scaffold_codebase
from ..experiment.outcome import CommitResult, StructuredFailure
from ..experiment.workspace import Workspace, codebase_digest
from ..gateway import Gateway, HttpProvider, MockProvider, ProviderConfig
from ..gateway import prompts
from ..gateway.mock import hashed_utility, pipeline_synthesizer
from ..ideas.search import parse_idea_text, run_eis
from ..ideas.types import make_seed
from ..probe.cache import ProbeCache
from ..probe.runner import probe_tree
from ..probe.tree import scan_tree
from ..report.builder import DataReport, ReportOptions, build_report
from ..skills.registry import scan_skills
from ..skills.view import footprint, materialize, trigger_skills, view_for_agent
from .config import PipelineConfig, render_command
from .store import RunRecord, RunStore

log = logging.getLogger(__name__)


class SimulatedCrash(RuntimeError):
    """Raised by the test-only crash hook after state was persisted."""


def derived_run_id(query: str, dataset_root: Path | str, seed: int) -> str:
    blob = f"{query}\x00{Path(dataset_root).resolve()}\x00{seed}".encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def build_gateway(config: PipelineConfig) -> Gateway:
    provider_config = ProviderConfig(
        endpoint=config.provider.endpoint,
        model=config.provider.model,
        auth_env=config.provider.auth_env,
        timeout=config.provider.timeout,
        retries=config.provider.retries,
        concurrency=config.provider.concurrency,
    )
    if config.provider.kind == "mock":
        provider = MockProvider(utilities=hashed_utility,
                                synthesizer=pipeline_synthesizer)
    else:
        provider = HttpProvider(provider_config)
    return Gateway(provider, provider_config)


def _render_feedback(feedback: Feedback | None) -> str:
    if feedback is None:
        return ""
    lines = [f"Previous critic verdict: {feedback.verdict}"]
    for axis in feedback.axes:
        lines.append(f"- {axis.axis} (confidence {axis.confidence:.2f}): {axis.instruction}")
    return "\n".join(lines)


def _report_summary(report: DataReport) -> str:
    lines = [f"dataset digest {report.dataset_digest[:12]}",
             f"{len(report.structure)} parsable leaves, {len(report.unparsable)} unparsable"]
    for entry in report.structure[:10]:
        fields = ", ".join(f"{f.name}:{f.semantic_type}" for f in entry.schema.fields[:8])
        lines.append(f"- {entry.leaf} [{entry.format_id}] rows={entry.schema.row_count} ({fields})")
    roles = report.roles()
    for role in ("target", "time-index", "identifier"):
        if roles.get(role):
            lines.append(f"role {role}: {', '.join(roles[role])}")
    if report.dependency.edges:
        lines.append(f"{len(report.dependency.edges)} dependency edges")
    return "\n".join(lines)


class _Stages:
    """Stage executors bound to one run directory."""

    def __init__(self, store: RunStore, run_id: str, config: PipelineConfig,
                 gateway: Gateway, dataset_root: Path, query: str):
        self.store = store
        self.run_id = run_id
        self.run_dir = store.run_dir(run_id)
        self.config = config
        self.gateway = gateway
        self.dataset_root = dataset_root
        self.query = query
        self.invocations = {"ideation": 0, "data": 0, "experiment": 0}
        self.skill_context = self._load_skills()

    def _load_skills(self) -> dict[str, list[tuple[str, str]]]:
        context: dict[str, list[tuple[str, str]]] = {}
        if not self.config.skill_folders:
            return context
        registry = scan_skills(self.config.skill_folders)
        footprints = {}
        for agent in ("ideation", "data", "experiment", "critic"):
            view = view_for_agent(registry, agent)
            matched = trigger_skills(self.query, view)
            blocks = [("system", f"Skill {name}:\n{materialize(view, name)}")
                      for name in matched]
            context[agent] = blocks
            fp = footprint(view)
            footprints[agent] = {"catalogue": fp.catalogue, "invoked": list(fp.invoked),
                                 "materialized": fp.materialized, "total": fp.total}
        self.store.write_artifact(self.run_id, "skills.json", {
            "version": "skills.v1",
            "diagnostics": [list(d) for d in registry.diagnostics],
            "footprints": footprints,
        })
        return context

    # -- ideation ---------------------------------------------------------------

    def ideation(self, artifacts: dict, feedback: Feedback | None) -> dict:
        call = self.invocations["ideation"]
        self.invocations["ideation"] += 1
        context = list(self.skill_context.get("ideation", ()))
        note = _render_feedback(feedback)
        if note:
            context.append(("user", note))
        seeds = []
        for i in range(1, self.config.eis.seeds + 1):
            reply = self.gateway.generate(
                prompts.seed_instruction(i, self.query),
                context=context, kind=f"seed:{i}")
            hypothesis, outline, prior = parse_idea_text(reply)
            seeds.append(make_seed(f"seed-{i}", hypothesis, outline, prior))
        result = run_eis(seeds, self.config.eis, self.gateway,
                         rng_seed=self.config.seed + 1000 * call)
        self.store.write_artifact(self.run_id, "eis.v1.json",
                                  result.record.to_document())
        return {
            "artifact": "eis.v1.json",
            "best_id": result.best.id,
            "best_text": result.best.render(),
            "ledger_total": result.ledger.total,
        }

    # -- data -------------------------------------------------------------------

    def data(self, artifacts: dict, feedback: Feedback | None) -> dict:
        self.invocations["data"] += 1
        tree = scan_tree(self.dataset_root)
        cache = ProbeCache(self.dataset_root / ".probe-cache")
        probe_run = probe_tree(tree, cache=cache)
        options = ReportOptions(
            outlier_threshold=self.config.report.outlier_threshold,
            overlap_threshold=self.config.report.overlap_threshold,
            use_judge=self.config.report.use_judge,
        )
        idea_text = artifacts.get("ideation", {}).get("best_text", "")
        report = build_report(probe_run, self.query, idea_text,
                              gateway=self.gateway if options.use_judge else None,
                              options=options)
        self.store.write_artifact(self.run_id, "report.v1.json", report.to_document())
        return {
            "artifact": "report.v1.json",
            "digest": report.dataset_digest,
            "summary": _report_summary(report),
        }

    # -- experiment ---------------------------------------------------------------

    def experiment(self, artifacts: dict, feedback: Feedback | None) -> dict:
        self.invocations["experiment"] += 1
        workspace = Workspace.create(self.run_dir, data_source=self.dataset_root)
        guard = render_command(self.config.experiment.guard_command)
        entry = render_command(self.config.experiment.entry_command)
        idea_text = artifacts.get("ideation", {}).get("best_text", "")
        report_summary = artifacts.get("data", {}).get("summary", "")
        context = list(self.skill_context.get("experiment", ()))
        note = _render_feedback(feedback)
        if note:
            context.append(("user", note))

        if not any(workspace.code_dir.iterdir()):
            scaffold_codebase(workspace, self.gateway, idea_text, report_summary, entry)

        doc: dict = {"version": "exec.v1"}
        commit = coding_loop(workspace, self.gateway, guard,
                             k_max=self.config.experiment.k_max,
                             context_blocks=context)
        if isinstance(commit, StructuredFailure):
            doc["coding"] = commit.to_dict()
            doc["ok"] = False
            self.store.write_artifact(self.run_id, "exec.v1.json", doc)
            return {"artifact": "exec.v1.json", "ok": False,
                    "outcome": f"coding failed: {commit.reason}"}
        doc["coding"] = commit.to_dict()

        outcome = execute(workspace, entry,
                          sample_period=self.config.experiment.sample_period,
                          wall_limit=self.config.experiment.wall_limit)
        if isinstance(outcome, StructuredFailure):
            # one routed retry per revision cycle: reflect on the failure,
            # recommit, re-execute
            doc["first_failure"] = outcome.to_dict()
            note = (f"execution failed: {outcome.reason}; "
                    f"latest loss {outcome.signal.loss if outcome.signal else None}")
            retry_commit = coding_loop(workspace, self.gateway, guard,
                                       k_max=self.config.experiment.k_max,
                                       context_blocks=context, failure_note=note)
            if isinstance(retry_commit, CommitResult):
                doc["retry_coding"] = retry_commit.to_dict()
                outcome = execute(workspace, entry,
                                  sample_period=self.config.experiment.sample_period,
                                  wall_limit=self.config.experiment.wall_limit)
            else:
                doc["retry_coding"] = retry_commit.to_dict()

        if isinstance(outcome, StructuredFailure):
            doc["execution"] = outcome.to_dict()
            doc["ok"] = False
            summary = f"execution failed: {outcome.reason}"
        else:
            doc["execution"] = outcome.to_dict()
            doc["ok"] = outcome.exit_status == 0
            loss = outcome.final_signal.loss if outcome.final_signal else None
            summary = f"exit {outcome.exit_status}, final loss {loss}"
        self.store.write_artifact(self.run_id, "exec.v1.json", doc)
        return {"artifact": "exec.v1.json", "ok": doc["ok"], "outcome": summary,
                "codebase_digest": codebase_digest(workspace)}

    # -- critic inputs -------------------------------------------------------------

    def artifact_summary(self, artifacts: dict) -> str:
        lines = [f"Research query: {self.query}"]
        if "ideation" in artifacts:
            lines.append("Selected idea:\n" + artifacts["ideation"].get("best_text", ""))
        if "data" in artifacts:
            lines.append("Data report:\n" + artifacts["data"].get("summary", ""))
        if "experiment" in artifacts:
            lines.append("Experiment outcome: " + artifacts["experiment"].get("outcome", ""))
        return "\n\n".join(lines)

    def workspace_summary(self, artifacts: dict) -> str:
        lines = []
        if "experiment" in artifacts:
            lines.append(f"codebase digest: {artifacts['experiment'].get('codebase_digest', 'n/a')}")
            lines.append(f"outcome: {artifacts['experiment'].get('outcome', 'n/a')}")
        if "data" in artifacts:
            lines.append(f"report digest: {artifacts['data'].get('digest', 'n/a')}")
        workspace = Workspace.open(self.run_dir)
        tail = workspace.stdout_tail(10)
        if tail:
            lines.append("log tail:\n" + "\n".join(tail))
        return "\n".join(lines) or "no workspace evidence yet"


MANUSCRIPT_STUB = """# Manuscript outline (stub)

Full manuscript generation is delegated to an external system; this stub
records what a write-up would cover.

## Hypothesis
{hypothesis}

## Data
{data}

## Results
{results}
"""


def run_pipeline(dataset_root: Path | str, query: str, config: PipelineConfig,
                 store: RunStore, run_id: str | None = None, resume: bool = False,
                 crash_after: str | None = None) -> RunRecord:
    """Execute (or resume) one full run; returns the terminal record."""
    if resume:
        if run_id is None:
            raise LabloopError("resume requires a run id")
        record = store.load_record(run_id)
        if record.status in ("passed", "failed"):
            return record
        config = PipelineConfig.from_dict(yaml.safe_load(
            (store.run_dir(run_id) / "config.yaml").read_text()))
        dataset_root = Path(record.dataset_root)
        query = record.query
        state = (CycleState.from_dict(store.read_artifact(run_id, "state.json"))
                 if store.has_artifact(run_id, "state.json") else None)
    else:
        config.validate()
        dataset_root = Path(dataset_root)
        if not dataset_root.is_dir():
            raise LabloopError(f"dataset root missing: {dataset_root}")
        run_id = run_id or derived_run_id(query, dataset_root, config.seed)
        record = RunRecord(run_id=run_id, query=query,
                           dataset_root=str(dataset_root.resolve()),
                           seed=config.seed)
        store.create_run(record)
        (store.run_dir(run_id) / "config.yaml").write_text(
            yaml.safe_dump(config.to_dict(), sort_keys=True))
        store.append_event(run_id, "run-created", {"query": query})
        state = None

    gateway = build_gateway(config)
    base_transcript = []
    if resume and store.has_artifact(run_id, "transcript.v1.json"):
        base_transcript = store.read_artifact(run_id, "transcript.v1.json")["entries"]

    def persist_transcript():
        new_entries = gateway.transcript_document()["entries"]
        for offset, entry in enumerate(new_entries):
            entry["seq"] = len(base_transcript) + offset
        store.write_artifact(run_id, "transcript.v1.json", {
            "version": "transcript.v1",
            "entries": base_transcript + new_entries,
        })

    stages = _Stages(store, run_id, config, gateway, dataset_root, query)

    def critique_fn(artifacts: dict) -> Feedback:
        return critique(stages.artifact_summary(artifacts), gateway,
                        threshold=config.critic.pass_threshold)

    def approve_fn(artifacts: dict, feedback: Feedback):
        iteration = cycle_state.iteration
        return approve(
            feedback, stages.workspace_summary(artifacts),
            config.critic.approval_mode, gateway=gateway,
            verdict_source=lambda: store.read_verdict(run_id, iteration),
            wait_seconds=config.critic.approval_wait,
            fallback_headless=config.critic.fallback_headless,
        )

    cycle_state = state or CycleState()

    def on_event(event: str, current: CycleState):
        store.write_artifact(run_id, "state.json", current.to_dict())
        store.write_artifact(run_id, "feedback.v1.json", {
            "version": "feedback.v1",
            "iterations": [r.to_dict() for r in current.records],
            "pending": current.feedback.to_dict() if current.feedback else None,
        })
        persist_transcript()
        store.append_event(run_id, event, {"iteration": current.iteration})
        if crash_after is not None and event == crash_after:
            raise SimulatedCrash(f"crash hook fired after {event}")

    executors = {"ideation": stages.ideation, "data": stages.data,
                 "experiment": stages.experiment}

    record.status = "running"
    store.save_record(record)
    try:
        result: CycleResult = revision_cycle(
            executors, critique_fn, approve_fn,
            n_max=config.critic.n_max, state=cycle_state, on_event=on_event)
    except AwaitingApproval:
        # a run that waited out a nonzero approval window is paused; an
        # immediate park is the normal interactive handoff
        record.status = "paused" if config.critic.approval_wait > 0 else "awaiting-approval"
        record.iterations = [r.to_dict() for r in cycle_state.records]
        store.save_record(record)
        store.append_event(run_id, record.status,
                           {"iteration": cycle_state.iteration})
        persist_transcript()
        return record
    except SimulatedCrash:
        raise
    except LabloopError as exc:
        record.status = "failed"
        record.error = str(exc)
        record.iterations = [r.to_dict() for r in cycle_state.records]
        store.save_record(record)
        store.append_event(run_id, "failed", {"error": str(exc)})
        persist_transcript()
        return record

    record.iterations = [r.to_dict() for r in result.records]
    record.status = result.status
    if result.status == "passed":
        idea_text = result.artifacts.get("ideation", {}).get("best_text", "(none)")
        data_summary = result.artifacts.get("data", {}).get("summary", "(none)")
        outcome = result.artifacts.get("experiment", {}).get("outcome", "(none)")
        (store.run_dir(run_id) / "manuscript-outline.md").write_text(
            MANUSCRIPT_STUB.format(hypothesis=idea_text, data=data_summary,
                                   results=outcome))
    store.save_record(record)
    store.append_event(run_id, "terminal", {"status": record.status})
    persist_transcript()
    return record
