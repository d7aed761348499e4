"""Static guard: the syntax/type/lint gate deciding whether a revision commits."""

from __future__ import annotations

import re
import shlex
import subprocess
from dataclasses import dataclass

from ..errors import GuardConfigError
from .workspace import Workspace

# "path/to/file.py:12:3: message" or "file.py:12: message"
_LOCATED = re.compile(r"^(?P<loc>[^\s:][^:]*:\d+(?::\d+)?):?\s*(?P<msg>.*)$")

MAX_DIAGNOSTICS = 50


@dataclass(frozen=True)
class Diagnostic:
    tool: str
    message: str
    location: str | None
    severity: str  # error | warning

    def to_dict(self) -> dict:
        return {"tool": self.tool, "message": self.message,
                "location": self.location, "severity": self.severity}


@dataclass
class GuardResult:
    verdict: int                       # 1 = commitable, 0 = rejected
    diagnostics: tuple[Diagnostic, ...]

    def to_dict(self) -> dict:
        return {"verdict": self.verdict,
                "diagnostics": [d.to_dict() for d in self.diagnostics]}


def run_guard(workspace: Workspace, command, timeout: float = 120.0) -> GuardResult:
    """Run the configured guard in the code directory.

    Verdict 1 iff the command exits 0.  A missing guard binary is a
    configuration error, distinct from a failing verdict, and does not
    consume a coding-loop iteration.
    """
    if not command:
        raise GuardConfigError("no guard command configured")
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    try:
        proc = subprocess.run(argv, cwd=workspace.code_dir, capture_output=True,
                              text=True, timeout=timeout)
    except FileNotFoundError as exc:
        raise GuardConfigError(f"guard command not found: {exc}") from None
    except subprocess.TimeoutExpired:
        result = GuardResult(0, (Diagnostic(argv[0], f"guard timed out after {timeout}s",
                                            None, "error"),))
        workspace.log_event({"kind": "guard", **result.to_dict()})
        return result

    verdict = 1 if proc.returncode == 0 else 0
    severity = "warning" if verdict == 1 else "error"
    diagnostics: list[Diagnostic] = []
    if verdict == 0:
        for line in (proc.stdout + "\n" + proc.stderr).splitlines():
            line = line.strip()
            if not line:
                continue
            match = _LOCATED.match(line)
            if match:
                diagnostics.append(Diagnostic(argv[0], match.group("msg") or line,
                                              match.group("loc"), severity))
            else:
                diagnostics.append(Diagnostic(argv[0], line, None, severity))
            if len(diagnostics) >= MAX_DIAGNOSTICS:
                break
        if not diagnostics:
            diagnostics.append(Diagnostic(argv[0], f"exit status {proc.returncode}",
                                          None, severity))
    result = GuardResult(verdict, tuple(diagnostics))
    workspace.log_event({"kind": "guard", **result.to_dict()})
    return result
