"""Trajectory export: turn gateway transcripts into training-ready segments.

Three preprocessing rules, applied in order: merge consecutive same-role
messages, cap tool outputs at 512 tokens (a truncation marker counts
against the cap), and split at user turns into segments of at most 16,384
tokens.  A span between user turns that alone exceeds the segment cap
cannot satisfy both constraints, so it is dropped and counted.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..tokens import TokenCounter, truncate_tokens, whitespace_tokens

TOOL_TOKEN_CAP = 512
SEGMENT_TOKEN_CAP = 16_384
TRUNCATION_MARKER = "[truncated]"


@dataclass(frozen=True)
class TrajectoryMessage:
    role: str
    content: str
    tokens: int

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content, "tokens": self.tokens}


@dataclass
class TrajectorySegment:
    messages: list[TrajectoryMessage]
    total: int

    def to_dict(self) -> dict:
        return {"messages": [m.to_dict() for m in self.messages], "total": self.total}


def messages_from_transcript(transcript_doc: dict) -> list[tuple[str, str]]:
    """Flatten a transcript into one (role, content) stream."""
    stream: list[tuple[str, str]] = []
    for entry in transcript_doc.get("entries", []):
        for message in entry.get("messages", []):
            stream.append((message["role"], message["content"]))
        stream.append(("assistant", entry.get("reply", "")))
    return stream


def _merge_same_role(messages: list[tuple[str, str]]) -> list[tuple[str, str]]:
    merged: list[tuple[str, str]] = []
    for role, content in messages:
        if merged and merged[-1][0] == role:
            merged[-1] = (role, merged[-1][1] + "\n\n" + content)
        else:
            merged.append((role, content))
    return merged


def _cap_tool_output(content: str, counter: TokenCounter, cap: int) -> str:
    if counter(content) <= cap:
        return content
    head = truncate_tokens(content, cap - 1, counter)
    candidate = (head + " " + TRUNCATION_MARKER) if head else TRUNCATION_MARKER
    while counter(candidate) > cap and head:
        head = truncate_tokens(head, max(0, counter(head) - 1), counter)
        candidate = (head + " " + TRUNCATION_MARKER) if head else TRUNCATION_MARKER
    return candidate


def export_trajectory(messages: list[tuple[str, str]],
                      counter: TokenCounter = whitespace_tokens,
                      tool_cap: int = TOOL_TOKEN_CAP,
                      segment_cap: int = SEGMENT_TOKEN_CAP
                      ) -> tuple[list[TrajectorySegment], int]:
    """Returns (segments, dropped_block_count)."""
    merged = _merge_same_role(messages)
    prepared: list[TrajectoryMessage] = []
    for role, content in merged:
        if role == "tool":
            content = _cap_tool_output(content, counter, tool_cap)
        prepared.append(TrajectoryMessage(role, content, counter(content)))

    # Blocks start at user turns; the very first block starts wherever the
    # stream starts.  Segment boundaries can only fall between blocks.
    blocks: list[list[TrajectoryMessage]] = []
    for message in prepared:
        if message.role == "user" and blocks and blocks[-1]:
            blocks.append([message])
        elif not blocks:
            blocks.append([message])
        else:
            blocks[-1].append(message)

    segments: list[TrajectorySegment] = []
    dropped = 0
    current: list[TrajectoryMessage] = []
    current_total = 0

    def close():
        nonlocal current, current_total
        if current:
            segments.append(TrajectorySegment(messages=current, total=current_total))
        current, current_total = [], 0

    for block in blocks:
        block_total = sum(m.tokens for m in block)
        if block_total > segment_cap:
            dropped += 1
            close()  # never glue the neighbours of a dropped span together
            continue
        if current_total + block_total > segment_cap:
            close()
        current.extend(block)
        current_total += block_total
    close()
    return segments, dropped


def trajectory_document(segments: list[TrajectorySegment], dropped: int) -> dict:
    return {
        "version": "trajectory.v1",
        "segments": [s.to_dict() for s in segments],
        "dropped_blocks": dropped,
    }
