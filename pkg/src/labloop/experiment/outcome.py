"""Terminal outcomes of the coding and execution phases."""

from __future__ import annotations

from dataclasses import dataclass, field

from .signal import RuntimeSignal


@dataclass
class CommitResult:
    """Coding phase success: the codebase passed the static guard."""

    reflections: int          # gateway reflections consumed (<= the budget)
    digest: str

    def to_dict(self) -> dict:
        return {"committed": True, "reflections": self.reflections, "digest": self.digest}


@dataclass
class ExecResult:
    """Execution ran to completion (any exit status)."""

    exit_status: int
    artifacts: list[str]
    log_tail: tuple[str, ...]
    final_signal: RuntimeSignal | None
    samples: int

    def to_dict(self) -> dict:
        return {
            "exit_status": self.exit_status,
            "artifacts": list(self.artifacts),
            "log_tail": list(self.log_tail),
            "final_signal": self.final_signal.to_dict() if self.final_signal else None,
            "samples": self.samples,
        }


@dataclass
class StructuredFailure:
    """Typed termination record; routed from execution back to coding."""

    phase: str                # coding | execution
    reason: str               # e.g. wall-clock, stagnation, guard-budget-exhausted
    signal: RuntimeSignal | None = None
    budget: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "reason": self.reason,
            "signal": self.signal.to_dict() if self.signal else None,
            "budget": dict(self.budget),
        }
