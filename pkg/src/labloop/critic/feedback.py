"""Critic stage: per-axis confidence and patch instructions.

Three fixed axes: accuracy (no misinformation), completeness (no gaps),
neutrality (no bias).  Each axis is one gateway call; the replies carry a
confidence in [0, 1] and a concrete revision instruction.  The provisional
verdict is REVISE when any axis falls below the pass threshold.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from ..errors import GatewayError
from ..gateway import prompts

log = logging.getLogger(__name__)

AXES = ("accuracy", "completeness", "neutrality")
DEFAULT_PASS_THRESHOLD = 0.5

_CONFIDENCE = re.compile(r"confidence\s*[:=]\s*([-+]?[0-9]*\.?[0-9]+)", re.IGNORECASE)
_PATCH = re.compile(r"patch\s*[:=]\s*(.*)", re.IGNORECASE | re.DOTALL)


@dataclass(frozen=True)
class AxisFeedback:
    axis: str
    confidence: float
    instruction: str

    def to_dict(self) -> dict:
        return {"axis": self.axis, "confidence": self.confidence,
                "instruction": self.instruction}

    @classmethod
    def from_dict(cls, d: dict) -> "AxisFeedback":
        return cls(d["axis"], d["confidence"], d["instruction"])


@dataclass(frozen=True)
class Feedback:
    verdict: str                       # PASS | REVISE (provisional until approved)
    axes: tuple[AxisFeedback, ...]     # exactly three, in AXES order

    def axis(self, name: str) -> AxisFeedback:
        for entry in self.axes:
            if entry.axis == name:
                return entry
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "axes": [a.to_dict() for a in self.axes]}

    @classmethod
    def from_dict(cls, d: dict) -> "Feedback":
        return cls(d["verdict"], tuple(AxisFeedback.from_dict(a) for a in d["axes"]))


def parse_axis_reply(reply: str) -> tuple[float | None, str]:
    confidence = None
    match = _CONFIDENCE.search(reply)
    if match:
        raw = float(match.group(1))
        confidence = min(1.0, max(0.0, raw))
        if confidence != raw:
            log.warning("axis confidence %s out of range, clamped to %s", raw, confidence)
    patch_match = _PATCH.search(reply)
    instruction = patch_match.group(1).strip() if patch_match else reply.strip()
    return confidence, instruction


def critique(artifact_summary: str, gateway, threshold: float = DEFAULT_PASS_THRESHOLD,
             retries: int = 1) -> Feedback:
    """One gateway call per axis; malformed axes degrade to confidence 0."""
    axes: list[AxisFeedback] = []
    for axis in AXES:
        confidence, instruction = None, ""
        for attempt in range(retries + 1):
            try:
                reply = gateway.generate(
                    prompts.critique_instruction(axis, artifact_summary),
                    kind=f"critique:{axis}",
                )
            except GatewayError as exc:
                instruction = f"critic call failed: {exc}"
                continue
            confidence, instruction = parse_axis_reply(reply)
            if confidence is not None:
                break
        if confidence is None:
            confidence = 0.0
            instruction = instruction or "critic reply unparsable"
            log.warning("axis %s unparsable after %d attempts", axis, retries + 1)
        axes.append(AxisFeedback(axis=axis, confidence=confidence, instruction=instruction))
    verdict = "PASS" if all(a.confidence >= threshold for a in axes) else "REVISE"
    return Feedback(verdict=verdict, axes=tuple(axes))
