"""Bounded revision recursion over the staged pipeline.

Each iteration runs the stages (injecting the previous feedback), critiques
the artifacts, and commits a verdict through the approval layer.  The loop
stops on PASS or when the retry budget is exhausted.  A REVISE whose patch
instructions name a single stage re-runs from that stage onward; upstream
artifacts are reused and earlier iterations' records are never touched.

The cycle state is a plain serializable object so a parked or crashed run
can resume exactly where it stopped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .approval import ApprovalResult
from .feedback import Feedback

STAGES = ("ideation", "data", "experiment")

# Words in a patch instruction that implicate a stage.
_STAGE_HINTS = {
    "ideation": ("ideation", "idea", "hypothesis"),
    "data": ("data", "report", "profiling"),
    "experiment": ("experiment", "code", "execution", "codebase"),
}

DEFAULT_N_MAX = 2


@dataclass
class IterationRecord:
    index: int
    stages_run: list[str]
    artifacts: dict
    feedback: Feedback
    approval: ApprovalResult

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "stages_run": list(self.stages_run),
            "artifacts": dict(self.artifacts),
            "feedback": self.feedback.to_dict(),
            "approval": self.approval.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IterationRecord":
        return cls(d["index"], list(d["stages_run"]), dict(d["artifacts"]),
                   Feedback.from_dict(d["feedback"]),
                   ApprovalResult.from_dict(d["approval"]))


@dataclass
class CycleState:
    iteration: int = 0
    artifacts: dict = field(default_factory=dict)
    completed_stages: list[str] = field(default_factory=list)
    stages_run: list[str] = field(default_factory=list)
    feedback: Feedback | None = None          # critiqued, not yet approved
    prior_feedback: Feedback | None = None    # injected into this iteration's stages
    records: list[IterationRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "artifacts": dict(self.artifacts),
            "completed_stages": list(self.completed_stages),
            "stages_run": list(self.stages_run),
            "feedback": self.feedback.to_dict() if self.feedback else None,
            "prior_feedback": self.prior_feedback.to_dict() if self.prior_feedback else None,
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CycleState":
        return cls(
            iteration=d["iteration"],
            artifacts=dict(d["artifacts"]),
            completed_stages=list(d["completed_stages"]),
            stages_run=list(d["stages_run"]),
            feedback=Feedback.from_dict(d["feedback"]) if d.get("feedback") else None,
            prior_feedback=(Feedback.from_dict(d["prior_feedback"])
                            if d.get("prior_feedback") else None),
            records=[IterationRecord.from_dict(r) for r in d.get("records", [])],
        )


def stages_to_run(feedback: Feedback | None) -> list[str]:
    """Earliest stage named in any patch instruction, then everything after it."""
    if feedback is None:
        return list(STAGES)
    named: list[int] = []
    for axis in feedback.axes:
        text = axis.instruction.lower()
        for index, stage in enumerate(STAGES):
            if any(hint in text for hint in _STAGE_HINTS[stage]):
                named.append(index)
    if not named:
        return list(STAGES)
    return list(STAGES[min(named):])


@dataclass
class CycleResult:
    status: str                    # passed | failed
    artifacts: dict
    records: list[IterationRecord]


def revision_cycle(executors: Mapping[str, Callable],
                   critique_fn: Callable[[dict], Feedback],
                   approve_fn: Callable[[dict, Feedback], ApprovalResult],
                   n_max: int = DEFAULT_N_MAX,
                   state: CycleState | None = None,
                   on_event: Callable[[str, CycleState], None] | None = None
                   ) -> CycleResult:
    """Drive the stage/critique/approve loop to a terminal verdict.

    `state` may be a rehydrated snapshot from a previous process; completed
    work is skipped, not re-run.  `on_event` fires after every stage and
    phase so callers can persist.  AwaitingApproval from `approve_fn`
    propagates with the state already up to date.
    """
    state = state or CycleState()

    def emit(event: str):
        if on_event:
            on_event(event, state)

    while True:
        rerun = stages_to_run(state.prior_feedback) if state.iteration > 0 else list(STAGES)
        for stage in STAGES:
            if stage in state.completed_stages:
                continue
            if stage in rerun or stage not in state.artifacts:
                state.artifacts[stage] = executors[stage](dict(state.artifacts),
                                                          state.prior_feedback)
                state.stages_run.append(stage)
            state.completed_stages.append(stage)
            emit(f"stage:{stage}")
        if state.feedback is None:
            state.feedback = critique_fn(dict(state.artifacts))
            emit("critique")
        approval = approve_fn(dict(state.artifacts), state.feedback)
        record = IterationRecord(
            index=state.iteration,
            stages_run=list(state.stages_run),
            artifacts=dict(state.artifacts),
            feedback=state.feedback,
            approval=approval,
        )
        state.records.append(record)
        emit("verdict")
        if approval.verdict == "PASS":
            return CycleResult("passed", dict(state.artifacts), state.records)
        if state.iteration >= n_max:
            return CycleResult("failed", dict(state.artifacts), state.records)
        state.prior_feedback = state.feedback
        state.feedback = None
        state.completed_stages = []
        state.stages_run = []
        state.iteration += 1
