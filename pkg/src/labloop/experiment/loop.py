"""Coding phase: patch, guard, reflect, within a fixed reflection budget."""

from __future__ import annotations

import logging

from ..errors import GatewayError, PatchError
from ..gateway import prompts
from .guard import run_guard
from .outcome import CommitResult, StructuredFailure
from .workspace import Patch, Workspace, apply_patch, codebase_digest

log = logging.getLogger(__name__)

DEFAULT_K_MAX = 5


def scaffold_codebase(workspace: Workspace, gateway, idea_text: str,
                      report_summary: str, entry_command: str) -> None:
    """Ask the gateway for the initial codebase and apply it as patch #1."""
    reply = gateway.generate(
        prompts.scaffold_instruction(idea_text, report_summary, entry_command),
        kind="scaffold",
    )
    patch = Patch.from_json(reply)
    apply_patch(workspace, patch)


def coding_loop(workspace: Workspace, gateway, guard_command, k_max: int = DEFAULT_K_MAX,
                context_blocks=(), failure_note: str = ""
                ) -> CommitResult | StructuredFailure:
    """Guard-driven patch recursion.

    Commits the moment the guard passes; otherwise reflects on the
    diagnostics (one gateway call), applies the returned patch, and tries
    again.  An unapplicable patch still consumes the iteration.  After
    k_max reflections without a pass, the phase fails.
    """
    reflections = 0
    for k in range(k_max + 1):
        guard = run_guard(workspace, guard_command)
        if guard.verdict == 1:
            digest = codebase_digest(workspace)
            workspace.log_event({"kind": "commit", "reflections": reflections,
                                 "digest": digest})
            return CommitResult(reflections=reflections, digest=digest)
        if k == k_max:
            break
        diagnostics = "\n".join(
            f"{d.location or '-'}: {d.message}" for d in guard.diagnostics)
        tail = "\n".join(workspace.stdout_tail(20))
        if failure_note:
            diagnostics = f"{failure_note}\n{diagnostics}"
        reflections += 1
        try:
            reply = gateway.generate(
                prompts.reflect_instruction(diagnostics, tail),
                context=tuple(context_blocks) + (("tool", f"guard diagnostics:\n{diagnostics}"),),
                kind="reflect",
            )
        except GatewayError as exc:
            workspace.log_event({"kind": "coding-failure", "reason": "gateway-failure",
                                 "error": str(exc)})
            return StructuredFailure("coding", "gateway-failure",
                                     budget={"k_max": k_max, "reflections": reflections})
        try:
            apply_patch(workspace, Patch.from_json(reply))
        except PatchError as exc:
            # counts as the iteration; the next reflection sees fresh diagnostics
            log.warning("patch rejected at iteration %d: %s", k, exc)
            workspace.log_event({"kind": "patch-rejected", "iteration": k,
                                 "error": str(exc)})
    workspace.log_event({"kind": "coding-failure", "reason": "guard-budget-exhausted"})
    return StructuredFailure("coding", "guard-budget-exhausted",
                             budget={"k_max": k_max, "reflections": reflections})
