"""Gateway: one chokepoint for every model-backed operation.

Callers never talk to a provider directly.  The gateway builds prompts,
validates replies (ranking replies must be no-ties permutations), retries
with a repair instruction on malformed output, and appends every call to a
transcript.  Transcripts are the ground truth for call accounting and for
trajectory export.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from ..errors import GatewayError

VALID_ROLES = ("system", "user", "assistant", "tool")


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class RankRequest:
    """One ranking question: order these candidates along one dimension."""

    dimension: str
    instruction: str
    candidates: tuple[str, ...]

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("rank request needs at least one candidate")


@dataclass(frozen=True)
class Permutation:
    """A no-ties ordering of candidate indices (1-based, best first)."""

    order: tuple[int, ...]

    def __post_init__(self):
        m = len(self.order)
        if sorted(self.order) != list(range(1, m + 1)):
            raise ValueError(f"not a bijection on 1..{m}: {self.order}")

    def ranks(self) -> dict[int, int]:
        """Map candidate index -> rank (1 = best)."""
        return {idx: pos + 1 for pos, idx in enumerate(self.order)}

    @classmethod
    def parse(cls, text: str, size: int) -> "Permutation":
        """Parse a comma-separated index line; raises ValueError if invalid."""
        numbers = None
        for line in text.strip().splitlines():
            found = re.findall(r"\d+", line)
            if len(found) == size:
                numbers = [int(x) for x in found]
                break
        if numbers is None:
            raise ValueError(f"no line with exactly {size} indices in reply")
        perm = cls(order=tuple(numbers))
        return perm


@dataclass
class ProviderConfig:
    endpoint: str = ""
    model: str = ""
    auth_env: str = ""          # name of the env var holding the token
    timeout: float = 60.0
    retries: int = 2            # repair retries for malformed replies
    transport_retries: int = 2
    concurrency: int = 4

    def validate(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0 or self.transport_retries < 0:
            raise ValueError("retries must be >= 0")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")


class Provider(Protocol):
    def complete(self, messages: Sequence[Message], hint: dict) -> str: ...


@dataclass
class TranscriptEntry:
    seq: int
    kind: str
    attempt: int                # 0 = first ask, >0 = repair re-prompts
    request_messages: tuple[Message, ...]
    reply: str
    request_digest: str
    reply_digest: str
    latency_ms: float

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "attempt": self.attempt,
            "messages": [m.to_dict() for m in self.request_messages],
            "reply": self.reply,
            "request_digest": self.request_digest,
            "reply_digest": self.reply_digest,
            "latency_ms": self.latency_ms,
        }


def _digest(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


RANK_SYSTEM = (
    "You are a strict research-idea judge. You will be given candidates and a "
    "single evaluation dimension. Reply with one line containing a complete "
    "ranking of candidate numbers, best first, comma-separated, with no ties, "
    "no repeats, and nothing else."
)

REPAIR_NOTE = (
    "Your previous reply was not a valid ranking: {problem}. Reply again with "
    "exactly one line of {m} comma-separated candidate numbers covering every "
    "candidate exactly once, best first."
)


class Gateway:
    """Validated, transcribed access to one provider."""

    def __init__(self, provider: Provider, config: ProviderConfig | None = None):
        self.provider = provider
        self.config = config or ProviderConfig()
        self.config.validate()
        self.transcript: list[TranscriptEntry] = []
        self._lock = threading.Lock()

    # -- transcript ---------------------------------------------------------

    def _record(self, kind: str, attempt: int, messages: Sequence[Message],
                reply: str, latency_ms: float) -> TranscriptEntry:
        entry = TranscriptEntry(
            seq=0,
            kind=kind,
            attempt=attempt,
            request_messages=tuple(messages),
            reply=reply,
            request_digest=_digest([m.to_dict() for m in messages]),
            reply_digest=_digest(reply),
            latency_ms=latency_ms,
        )
        with self._lock:
            entry.seq = len(self.transcript)
            self.transcript.append(entry)
        return entry

    def _call(self, kind: str, attempt: int, messages: Sequence[Message], hint: dict) -> str:
        start = time.monotonic()
        reply = self.provider.complete(messages, hint)
        latency = 0.0 if getattr(self.provider, "zero_latency", False) \
            else (time.monotonic() - start) * 1000.0
        self._record(kind, attempt, messages, reply, latency)
        return reply

    def transcript_document(self) -> dict:
        return {
            "version": "transcript.v1",
            "entries": [e.to_dict() for e in self.transcript],
        }

    def call_counts(self) -> dict[str, int]:
        """Logical calls per kind (repair re-prompts not double-counted)."""
        counts: dict[str, int] = {}
        for e in self.transcript:
            if e.attempt == 0:
                counts[e.kind] = counts.get(e.kind, 0) + 1
        return counts

    # -- operations ----------------------------------------------------------

    def rank_candidates(self, request: RankRequest, *, kind: str | None = None) -> Permutation:
        kind = kind or f"rank:{request.dimension}"
        m = len(request.candidates)
        body = [request.instruction, ""]
        for i, text in enumerate(request.candidates, start=1):
            body.append(f"Candidate {i}:\n{text}\n")
        body.append(
            f"Rank all {m} candidates from best to worst on this dimension. "
            f"Reply with one line of {m} comma-separated candidate numbers."
        )
        messages = [Message("system", RANK_SYSTEM), Message("user", "\n".join(body))]
        hint = {"kind": kind, "mode": "rank", "candidates": list(request.candidates)}

        last_problem = ""
        last_reply = None
        for attempt in range(self.config.retries + 1):
            ask = list(messages)
            if attempt > 0:
                ask.append(Message("assistant", last_reply or ""))
                ask.append(Message("user", REPAIR_NOTE.format(problem=last_problem, m=m)))
            reply = self._call(kind, attempt, ask, hint)
            last_reply = reply
            try:
                return Permutation.parse(reply, m)
            except ValueError as exc:
                last_problem = str(exc)
        raise GatewayError(
            f"no valid permutation after {self.config.retries + 1} attempts: {last_problem}",
            raw_reply=last_reply,
        )

    def rank_many(self, requests: Sequence[RankRequest], *, kinds: Sequence[str] | None = None
                  ) -> list[Permutation]:
        """Dispatch several ranking requests, possibly in parallel.

        Results and transcript order follow request order regardless of
        completion order, so replays are byte-identical.
        """
        kinds = list(kinds) if kinds else [f"rank:{r.dimension}" for r in requests]
        if len(requests) <= 1 or self.config.concurrency <= 1:
            return [self.rank_candidates(r, kind=k) for r, k in zip(requests, kinds)]

        # Run against a deferred-transcript shadow, then replay entries in
        # request order into the shared transcript.
        results: list[Permutation | Exception] = [None] * len(requests)  # type: ignore
        shadows = [_ShadowGateway(self) for _ in requests]

        def work(i: int):
            try:
                results[i] = shadows[i].rank_candidates(requests[i], kind=kinds[i])
            except Exception as exc:       # re-raised after transcript merge
                results[i] = exc

        max_workers = min(len(requests), self.config.concurrency)
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            list(pool.map(work, range(len(requests))))
        for shadow in shadows:
            for pending in shadow.pending:
                self._record(*pending)
        for res in results:
            if isinstance(res, Exception):
                raise res
        return results  # type: ignore[return-value]

    def generate(self, instruction: str, context: Sequence[tuple[str, str]] = (), *,
                 kind: str = "generate") -> str:
        if not instruction or not instruction.strip():
            raise GatewayError("empty prompt")
        messages = [Message("user", instruction)]
        for role, text in context:
            if role not in VALID_ROLES:
                raise GatewayError(f"invalid context role: {role}")
            messages.append(Message(role, text))
        hint = {"kind": kind, "mode": "generate"}

        last_error: Exception | None = None
        for attempt in range(self.config.retries + 1):
            try:
                reply = self._call(kind, attempt, messages, hint)
            except GatewayError:
                raise
            except Exception as exc:  # transport-level failure
                last_error = exc
                continue
            if reply.strip():
                return reply
            last_error = GatewayError("provider returned empty text")
        raise GatewayError(f"generate failed after retries: {last_error}")


class _ShadowGateway(Gateway):
    """Gateway clone that buffers transcript entries instead of appending.

    Used by rank_many so concurrent calls can be merged back in a
    deterministic order.
    """

    def __init__(self, parent: Gateway):
        self.provider = parent.provider
        self.config = parent.config
        self.transcript = []
        self._lock = threading.Lock()
        self.pending: list[tuple] = []

    def _call(self, kind, attempt, messages, hint):
        start = time.monotonic()
        reply = self.provider.complete(messages, hint)
        latency = 0.0 if getattr(self.provider, "zero_latency", False) \
            else (time.monotonic() - start) * 1000.0
        self.pending.append((kind, attempt, messages, reply, latency))
        return reply
