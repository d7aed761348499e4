"""Approval layer: the gate that commits a verdict.

Headless mode asks one verification call grounded in workspace evidence
(file digests, log tails) and may flip the critic's provisional verdict.
Interactive mode waits for a human verdict delivered through the service;
if none arrives in time the run parks itself, resumable.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass
from typing import Callable

from ..errors import AwaitingApproval, GatewayError
from ..gateway import prompts
from .feedback import Feedback

log = logging.getLogger(__name__)

_VERDICT = re.compile(r"verdict\s*[:=]\s*(PASS|REVISE)", re.IGNORECASE)
_REASON = re.compile(r"reason\s*[:=]\s*(.*)", re.IGNORECASE)


@dataclass(frozen=True)
class ApprovalResult:
    verdict: str             # final, committed
    mode: str                # headless | interactive
    provisional: str         # the critic's verdict going in
    flipped: bool
    reviewer: str = ""
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "mode": self.mode,
            "provisional": self.provisional,
            "flipped": self.flipped,
            "reviewer": self.reviewer,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ApprovalResult":
        return cls(d["verdict"], d["mode"], d["provisional"], d["flipped"],
                   d.get("reviewer", ""), d.get("note", ""))


def _feedback_summary(feedback: Feedback) -> str:
    lines = [f"provisional verdict: {feedback.verdict}"]
    for axis in feedback.axes:
        lines.append(f"- {axis.axis}: confidence {axis.confidence:.2f}; {axis.instruction}")
    return "\n".join(lines)


def headless_approve(feedback: Feedback, workspace_summary: str, gateway) -> ApprovalResult:
    provisional = feedback.verdict
    try:
        reply = gateway.generate(
            prompts.approval_instruction(_feedback_summary(feedback), workspace_summary),
            kind="approval",
        )
    except GatewayError as exc:
        log.warning("approval call failed, keeping provisional verdict: %s", exc)
        return ApprovalResult(provisional, "headless", provisional, False,
                              note=f"approval call failed: {exc}")
    match = _VERDICT.search(reply)
    if not match:
        return ApprovalResult(provisional, "headless", provisional, False,
                              note="approval reply unparsable; provisional kept")
    verdict = match.group(1).upper()
    reason_match = _REASON.search(reply)
    note = reason_match.group(1).strip() if reason_match else ""
    return ApprovalResult(verdict, "headless", provisional,
                          flipped=verdict != provisional, note=note)


def approve(feedback: Feedback, workspace_summary: str, mode: str, gateway=None,
            verdict_source: Callable[[], dict | None] | None = None,
            wait_seconds: float = 0.0, poll_interval: float = 0.5,
            fallback_headless: bool = False) -> ApprovalResult:
    """Commit the final verdict.

    Interactive mode polls `verdict_source` for a human verdict for up to
    `wait_seconds`; with no verdict it either falls back to headless or
    raises AwaitingApproval so the run can park and resume later.
    """
    if mode == "headless":
        if gateway is None:
            raise ValueError("headless approval needs a gateway")
        return headless_approve(feedback, workspace_summary, gateway)
    if mode != "interactive":
        raise ValueError(f"unknown approval mode: {mode}")
    if verdict_source is None:
        raise ValueError("interactive approval needs a verdict source")

    deadline = time.monotonic() + wait_seconds
    while True:
        committed = verdict_source()
        if committed:
            verdict = str(committed.get("verdict", "")).upper()
            if verdict not in ("PASS", "REVISE"):
                raise ValueError(f"invalid committed verdict: {committed!r}")
            return ApprovalResult(
                verdict=verdict,
                mode="interactive",
                provisional=feedback.verdict,
                flipped=verdict != feedback.verdict,
                reviewer=str(committed.get("reviewer", "")),
                note=str(committed.get("note", "")),
            )
        if time.monotonic() >= deadline:
            break
        time.sleep(min(poll_interval, max(0.0, deadline - time.monotonic())))
    if fallback_headless and gateway is not None:
        return headless_approve(feedback, workspace_summary, gateway)
    raise AwaitingApproval("no verdict committed; run parked awaiting approval")
