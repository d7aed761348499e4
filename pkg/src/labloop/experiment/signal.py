"""Runtime signal parsing: log tail, latest loss, coarse progress."""

from __future__ import annotations

import re
import time
from dataclasses import dataclass

LOSS_PATTERN = re.compile(r"loss\s*[:=]\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)",
                          re.IGNORECASE)
COUNTER_PATTERN = re.compile(r"(\d+)\s*/\s*(\d+)")

TAIL_LINES = 50


@dataclass(frozen=True)
class RuntimeSignal:
    log_tail: tuple[str, ...]
    loss: float | None
    progress: float           # clamped to [0, 1]
    at: float                 # monotonic sample time

    def to_dict(self) -> dict:
        return {"log_tail": list(self.log_tail), "loss": self.loss,
                "progress": self.progress, "at": self.at}


def _clamp(x: float) -> float:
    return max(0.0, min(1.0, x))


def parse_runtime_signal(tail_lines, elapsed: float | None = None,
                         limit: float | None = None,
                         loss_pattern: re.Pattern = LOSS_PATTERN,
                         at: float | None = None) -> RuntimeSignal:
    """Pull loss and progress out of the latest log lines.

    Loss comes from the last line matching the loss pattern; progress from
    the last k/N-style counter, else the elapsed fraction of the wall
    limit.  Absent markers simply stay absent.
    """
    tail = tuple(tail_lines)[-TAIL_LINES:]
    loss = None
    for line in reversed(tail):
        match = loss_pattern.search(line)
        if match:
            try:
                loss = float(match.group(1))
            except ValueError:
                loss = None
            break

    progress = None
    for line in reversed(tail):
        for match in reversed(list(COUNTER_PATTERN.finditer(line))):
            denominator = int(match.group(2))
            if denominator > 0:
                progress = _clamp(int(match.group(1)) / denominator)
                break
        if progress is not None:
            break
    if progress is None:
        if elapsed is not None and limit:
            progress = _clamp(elapsed / limit)
        else:
            progress = 0.0

    return RuntimeSignal(log_tail=tail, loss=loss, progress=progress,
                         at=time.monotonic() if at is None else at)
