"""Deterministic mock providers.

Two modes, matching how tests drive the pipeline:

* scripted: generation replies pop from a fixed list (exhaustion is an
  error), ranking replies sort candidates by a hidden utility table.
* synthesized: a callable fabricates replies from the request, so whole
  pipeline runs stay deterministic without pre-counting every call.

Identical configuration always yields identical transcripts.
"""

from __future__ import annotations

import hashlib
import json
from typing import Callable, Mapping, Sequence

from ..errors import GatewayError, MockScriptExhausted
from .base import Message


def hashed_utility(text: str) -> float:
    """Stable pseudo-utility in [0, 1) derived from the text itself."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class MockProvider:
    """Offline provider with hidden-utility ranking and scripted/synthesized text."""

    zero_latency = True

    def __init__(
        self,
        utilities: Mapping[str, float] | Callable[[str], float] | None = None,
        script: Sequence[str] | None = None,
        rank_script: Sequence[str] | None = None,
        synthesizer: Callable[[Sequence[Message], dict], str] | None = None,
    ):
        self._utilities = utilities
        self._script = list(script) if script is not None else None
        self._rank_script = list(rank_script) if rank_script is not None else None
        self._synthesizer = synthesizer
        self._script_pos = 0
        self._rank_pos = 0
        self.calls: list[tuple[tuple[Message, ...], dict]] = []

    def utility(self, text: str) -> float:
        if self._utilities is None:
            return 0.0
        if callable(self._utilities):
            return self._utilities(text)
        return self._utilities.get(text, 0.0)

    def complete(self, messages: Sequence[Message], hint: dict) -> str:
        self.calls.append((tuple(messages), dict(hint)))
        if hint.get("mode") == "rank":
            return self._rank_reply(hint)
        return self._generate_reply(messages, hint)

    def _rank_reply(self, hint: dict) -> str:
        if self._rank_script is not None:
            if self._rank_pos >= len(self._rank_script):
                raise MockScriptExhausted("rank script exhausted")
            reply = self._rank_script[self._rank_pos]
            self._rank_pos += 1
            return reply
        candidates = hint.get("candidates") or []
        # Stable sort: equal utilities keep index order.
        order = sorted(range(1, len(candidates) + 1),
                       key=lambda i: -self.utility(candidates[i - 1]))
        return ",".join(str(i) for i in order)

    def _generate_reply(self, messages: Sequence[Message], hint: dict) -> str:
        if self._script is not None:
            if self._script_pos >= len(self._script):
                raise MockScriptExhausted(
                    f"script exhausted after {len(self._script)} replies")
            reply = self._script[self._script_pos]
            self._script_pos += 1
            return reply
        if self._synthesizer is not None:
            return self._synthesizer(messages, hint)
        # Echo mode: the instruction (first user message) comes back verbatim.
        for msg in messages:
            if msg.role == "user":
                return msg.content
        raise GatewayError("nothing to echo")


MOCK_SCAFFOLD = {
    "hunks": [
        {
            "path": "main.py",
            "op": "create",
            "content": (
                "import json\n"
                "\n"
                "losses = [0.9, 0.5]\n"
                "for epoch, loss in enumerate(losses, start=1):\n"
                "    print(f\"epoch {epoch}/{len(losses)} loss: {loss}\")\n"
                "with open(\"metrics.json\", \"w\") as fh:\n"
                "    json.dump({\"final_loss\": losses[-1]}, fh)\n"
                "print(\"done\")\n"
            ),
        }
    ]
}


def pipeline_synthesizer(messages: Sequence[Message], hint: dict) -> str:
    """Fabricate a plausible reply for any pipeline request kind.

    Texts embed a digest of the prompt so distinct requests get distinct,
    reproducible replies.
    """
    kind = hint.get("kind", "")
    blob = json.dumps([m.to_dict() for m in messages], sort_keys=True)
    tag = hashlib.sha256(blob.encode("utf-8")).hexdigest()[:8]
    head = kind.split(":", 1)[0]
    if head == "seed":
        return (
            f"Hypothesis: seed direction {tag} for the stated query.\n"
            f"Experiment outline: profile the data, fit a baseline, compare variants ({tag}).\n"
            f"Prior work: differs from known approaches by focus {tag}."
        )
    if head in ("improve", "combine"):
        return (
            f"Hypothesis: refined direction {tag}.\n"
            f"Experiment outline: sharpened protocol {tag}.\n"
            f"Prior work: positioning updated {tag}."
        )
    if head == "scaffold":
        return json.dumps(MOCK_SCAFFOLD)
    if head == "reflect":
        # Benign no-op patch; the mock scaffold already passes the guard.
        return json.dumps({"hunks": []})
    if head == "critique":
        return "confidence: 0.9\npatch: none"
    if head == "approval":
        return "verdict: PASS\nreason: artifacts consistent with workspace state"
    if head == "semantics":
        return "no role overrides"  # unparsable on purpose: heuristics decide
    return f"ok {tag}"
