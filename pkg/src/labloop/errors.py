"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class LabloopError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(LabloopError):
    """Invalid or missing configuration."""


class ScanError(LabloopError):
    """Dataset tree could not be scanned."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message if path is None else f"{message}: {path}")
        self.path = path


class ProbeFailure(LabloopError):
    """A leaf could not be probed; recorded, never aborts a traversal."""


class ReportError(LabloopError):
    """Report construction failed."""


class GatewayError(LabloopError):
    """Provider call failed after retries.  Carries the raw reply if any."""

    def __init__(self, message: str, raw_reply: str | None = None):
        super().__init__(message)
        self.raw_reply = raw_reply


class MockScriptExhausted(GatewayError):
    """A scripted mock provider ran out of replies."""


class SearchError(LabloopError):
    """Idea search aborted.  Carries partial provenance for post-mortem."""

    def __init__(self, message: str, record=None):
        super().__init__(message)
        self.record = record


class SkillError(LabloopError):
    """Skill registry problem."""


class DuplicateSkillError(SkillError):
    """Same skill name found in two files."""


class SkillAccessError(SkillError):
    """Agent asked for a skill outside its restricted view."""


class PatchError(LabloopError):
    """Patch rejected; the codebase is unchanged."""


class GuardConfigError(LabloopError):
    """The static guard command itself is missing or unrunnable.

    Distinct from a failing guard verdict: this does not consume a
    coding-loop iteration.
    """


class StoreError(LabloopError):
    """Run store problem."""


class RunNotFoundError(StoreError):
    """No run with the requested id."""


class VerdictConflictError(StoreError):
    """A verdict was already committed for this iteration."""


class AwaitingApproval(LabloopError):
    """Interactive approval pending; the run is parked, resumable."""
