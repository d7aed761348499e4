from .feedback import AXES, AxisFeedback, Feedback, critique
from .approval import ApprovalResult, approve, headless_approve
from .cycle import STAGES, CycleResult, CycleState, IterationRecord, revision_cycle, stages_to_run

__all__ = [
    "AXES",
    "AxisFeedback",
    "Feedback",
    "critique",
    "ApprovalResult",
    "approve",
    "headless_approve",
    "STAGES",
    "CycleResult",
    "CycleState",
    "IterationRecord",
    "revision_cycle",
    "stages_to_run",
]
