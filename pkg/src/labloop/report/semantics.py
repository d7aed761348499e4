"""Query-conditioned role binding.

Downstream code addresses fields by role (target, time-index, covariate,
identifier, other), never by raw column name.  Judge mode asks the gateway;
the deterministic heuristic table is both the fallback and the offline mode.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from ..errors import GatewayError
from ..gateway import prompts

log = logging.getLogger(__name__)

ROLES = ("target", "time-index", "covariate", "identifier", "other")

HEURISTIC_CONFIDENCE = {
    "time-index": 0.9,
    "identifier": 0.9,
    "target": 0.7,
    "covariate": 0.5,
    "other": 0.5,
}
DEFAULT_JUDGE_CONFIDENCE = 0.75


@dataclass
class SemanticBinding:
    field_id: str
    role: str
    confidence: float
    source: str          # judge | heuristic
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "field_id": self.field_id,
            "role": self.role,
            "confidence": self.confidence,
            "source": self.source,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SemanticBinding":
        return cls(d["field_id"], d["role"], d["confidence"], d["source"], d.get("note", ""))


@dataclass(frozen=True)
class FieldFacts:
    """What the binder needs to know about one field."""

    field_id: str
    name: str
    semantic_type: str
    cardinality: int
    row_count: int | None


def _query_tokens(query: str) -> set[str]:
    return set(re.findall(r"\w+", query.casefold()))


def heuristic_role(facts: FieldFacts, query_tokens: set[str]) -> str:
    """Fixed rule table, applied in order."""
    if facts.semantic_type == "timestamp":
        return "time-index"
    if (facts.semantic_type in ("integer", "text")
            and facts.row_count and facts.cardinality == facts.row_count):
        return "identifier"
    if facts.name.casefold() in query_tokens:
        return "target"
    return "covariate"


def heuristic_roles(fields: list[FieldFacts], query: str) -> list[SemanticBinding]:
    tokens = _query_tokens(query)
    bindings = []
    for facts in fields:
        role = heuristic_role(facts, tokens)
        bindings.append(SemanticBinding(
            field_id=facts.field_id,
            role=role,
            confidence=HEURISTIC_CONFIDENCE[role],
            source="heuristic",
        ))
    return bindings


_REPLY_LINE = re.compile(
    r"^\s*(?P<field>.+?)\s*:\s*(?P<role>[a-z-]+)\s*(?:,\s*(?P<conf>[0-9.]+))?\s*$")


def _parse_judge_reply(reply: str, known_fields: set[str]) -> dict[str, tuple[str, float]]:
    assignments: dict[str, tuple[str, float]] = {}
    for line in reply.splitlines():
        match = _REPLY_LINE.match(line)
        if not match:
            continue
        field_id = match.group("field").strip()
        role = match.group("role").strip().lower()
        if field_id not in known_fields or role not in ROLES:
            continue
        confidence = DEFAULT_JUDGE_CONFIDENCE
        if match.group("conf"):
            try:
                confidence = min(1.0, max(0.0, float(match.group("conf"))))
            except ValueError:
                pass
        assignments[field_id] = (role, confidence)
    return assignments


def bind_roles(fields: list[FieldFacts], query: str, idea: str,
               gateway=None, use_judge: bool = True, retries: int = 2
               ) -> list[SemanticBinding]:
    """One binding per field.

    Judge mode sends field names plus fingerprint facts to the gateway; a
    reply that stays malformed after bounded retries falls back to the
    heuristic table, with the source marked accordingly.
    """
    fallback = {b.field_id: b for b in heuristic_roles(fields, query)}
    if not use_judge or gateway is None:
        return [fallback[f.field_id] for f in fields]

    field_lines = [
        f"{f.field_id} (type={f.semantic_type}, distinct={f.cardinality}, rows={f.row_count})"
        for f in fields
    ]
    known = {f.field_id for f in fields}
    assignments: dict[str, tuple[str, float]] = {}
    for attempt in range(retries + 1):
        try:
            reply = gateway.generate(
                prompts.semantics_instruction(query, idea, field_lines),
                kind="semantics",
            )
        except GatewayError as exc:
            log.warning("role binding call failed (attempt %d): %s", attempt, exc)
            continue
        assignments = _parse_judge_reply(reply, known)
        if assignments:
            break

    bindings = []
    for facts in fields:
        if facts.field_id in assignments:
            role, confidence = assignments[facts.field_id]
            bindings.append(SemanticBinding(facts.field_id, role, confidence, "judge"))
        else:
            bindings.append(fallback[facts.field_id])
    return bindings
