"""Execution phase: launch the codebase, sample the runtime signal, stop early.

The sampler never blocks or kills the child except through a stop
predicate or the wall clock.  Stop predicates see the sample history and
return a reason string when they fire.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import time
from dataclasses import dataclass
from typing import Callable, Sequence

from .outcome import ExecResult, StructuredFailure
from .signal import RuntimeSignal, parse_runtime_signal
from .workspace import Workspace

ENV_ALLOWLIST = ("PATH", "HOME", "LANG", "LC_ALL", "TMPDIR", "PYTHONPATH",
                 "VIRTUAL_ENV", "SYSTEMROOT")
TERMINATE_GRACE = 5.0


@dataclass(frozen=True)
class Sample:
    signal: RuntimeSignal
    log_bytes: int


StopPredicate = Callable[[Sequence[Sample]], "str | None"]


def loss_stagnation(window: int = 5) -> StopPredicate:
    """Fires when the last `window` loss readings show no new minimum."""

    def check(samples: Sequence[Sample]) -> str | None:
        losses = [s.signal.loss for s in samples if s.signal.loss is not None]
        if len(losses) < window + 1:
            return None
        best_before = min(losses[:-window])
        if min(losses[-window:]) >= best_before:
            return "stagnation"
        return None

    return check


def log_silence(periods: int = 3) -> StopPredicate:
    """Fires when the log has not grown for `periods` consecutive samples."""

    def check(samples: Sequence[Sample]) -> str | None:
        if len(samples) < periods + 1:
            return None
        recent = samples[-(periods + 1):]
        if all(s.log_bytes == recent[0].log_bytes for s in recent[1:]):
            return "log-silence"
        return None

    return check


def default_predicates() -> list[StopPredicate]:
    return [loss_stagnation(5), log_silence(3)]


def _child_env(workspace: Workspace, extra: dict | None) -> dict:
    env = {name: os.environ[name] for name in ENV_ALLOWLIST if name in os.environ}
    if workspace.data_dir is not None:
        env["DATA_DIR"] = str(workspace.data_dir)
    env["PYTHONUNBUFFERED"] = "1"
    if extra:
        env.update(extra)
    return env


def execute(workspace: Workspace, entry, *, sample_period: float = 10.0,
            wall_limit: float = 1800.0, predicates: Sequence[StopPredicate] | None = None,
            env: dict | None = None) -> ExecResult | StructuredFailure:
    """Launch the entry command and watch it.

    Normal exit (any status) yields ExecResult; a stop predicate or a
    wall-clock breach terminates the child and yields a structured failure
    that the caller routes back to the coding phase.
    """
    if predicates is None:
        predicates = default_predicates()
    argv = shlex.split(entry) if isinstance(entry, str) else list(entry)
    stdout_path = workspace.log_dir / "stdout.log"
    stderr_path = workspace.log_dir / "stderr.log"

    before = _file_index(workspace)
    start = time.monotonic()
    try:
        with open(stdout_path, "ab") as out, open(stderr_path, "ab") as err:
            proc = subprocess.Popen(argv, cwd=workspace.code_dir, stdout=out,
                                    stderr=err, env=_child_env(workspace, env))
    except OSError as exc:
        workspace.log_event({"kind": "exec-launch-failure", "error": str(exc)})
        return StructuredFailure("execution", "launch-failure",
                                 budget={"wall_limit": wall_limit})

    deadline = start + wall_limit
    next_sample = start + sample_period
    samples: list[Sample] = []

    def take_sample() -> Sample:
        elapsed = time.monotonic() - start
        signal = parse_runtime_signal(workspace.stdout_tail(), elapsed=elapsed,
                                      limit=wall_limit)
        log_bytes = stdout_path.stat().st_size if stdout_path.exists() else 0
        sample = Sample(signal=signal, log_bytes=log_bytes)
        samples.append(sample)
        workspace.log_event({"kind": "signal", "loss": signal.loss,
                             "progress": signal.progress, "log_bytes": log_bytes})
        return sample

    def terminate(reason: str) -> StructuredFailure:
        proc.terminate()
        try:
            proc.wait(timeout=TERMINATE_GRACE)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
        final = samples[-1].signal if samples else None
        workspace.log_event({"kind": "exec-failure", "reason": reason})
        return StructuredFailure("execution", reason, signal=final,
                                 budget={"wall_limit": wall_limit,
                                         "elapsed": time.monotonic() - start,
                                         "samples": len(samples)})

    while True:
        now = time.monotonic()
        if now >= deadline:
            take_sample()
            return terminate("wall-clock")
        wait_for = min(next_sample, deadline) - now
        try:
            proc.wait(timeout=max(0.01, wait_for))
            break  # normal exit
        except subprocess.TimeoutExpired:
            pass
        if time.monotonic() >= next_sample:
            take_sample()
            next_sample += sample_period
            for predicate in predicates:
                reason = predicate(samples)
                if reason:
                    return terminate(reason)

    tail = tuple(workspace.stdout_tail())
    final_signal = parse_runtime_signal(tail, elapsed=time.monotonic() - start,
                                        limit=wall_limit)
    after = _file_index(workspace)
    artifacts = sorted(rel for rel, stamp in after.items()
                       if before.get(rel) != stamp)
    result = ExecResult(exit_status=proc.returncode, artifacts=artifacts,
                        log_tail=tail, final_signal=final_signal,
                        samples=len(samples))
    workspace.log_event({"kind": "exec-complete", "exit_status": proc.returncode,
                         "artifacts": artifacts})
    return result


def _file_index(workspace: Workspace) -> dict[str, tuple]:
    index = {}
    for path in workspace.code_dir.rglob("*"):
        if path.is_file():
            stat = path.stat()
            index[str(path.relative_to(workspace.code_dir))] = (stat.st_mtime_ns,
                                                                stat.st_size)
    return index
