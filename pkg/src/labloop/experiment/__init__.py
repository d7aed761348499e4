from .workspace import Hunk, Patch, Workspace, apply_patch, codebase_digest
from .guard import Diagnostic, GuardResult, run_guard
from .signal import LOSS_PATTERN, RuntimeSignal, parse_runtime_signal
from .outcome import CommitResult, ExecResult, StructuredFailure
from .executor import Sample, execute, log_silence, loss_stagnation
from .loop import coding_loop, scaffold_codebase

__all__ = [
    "Hunk",
    "Patch",
    "Workspace",
    "apply_patch",
    "codebase_digest",
    "Diagnostic",
    "GuardResult",
    "run_guard",
    "LOSS_PATTERN",
    "RuntimeSignal",
    "parse_runtime_signal",
    "CommitResult",
    "ExecResult",
    "StructuredFailure",
    "Sample",
    "execute",
    "log_silence",
    "loss_stagnation",
    "coding_loop",
    "scaffold_codebase",
]
