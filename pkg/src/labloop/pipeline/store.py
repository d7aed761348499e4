"""Filesystem-backed run store.

One directory per run: record.json, stage artifacts, cycle state, verdicts,
and an append-only event log.  Every write is temp-then-rename so a crash
never leaves a half-written document; the service and the CLI coordinate
purely through these files.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import RunNotFoundError, StoreError, VerdictConflictError

STATUSES = ("running", "awaiting-approval", "passed", "failed", "paused")


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(path: Path, doc) -> None:
    _atomic_write(path, json.dumps(doc, sort_keys=True, indent=1) + "\n")


@dataclass
class RunRecord:
    run_id: str
    query: str
    dataset_root: str
    status: str = "running"
    seed: int = 0
    iterations: list[dict] = field(default_factory=list)
    error: str | None = None
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "query": self.query,
            "dataset_root": self.dataset_root,
            "status": self.status,
            "seed": self.seed,
            "iterations": list(self.iterations),
            "error": self.error,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**{k: d[k] for k in (
            "run_id", "query", "dataset_root", "status", "seed", "iterations",
            "error", "created_at", "updated_at")})


class RunStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    # -- run directories ------------------------------------------------------

    def run_dir(self, run_id: str) -> Path:
        if not run_id or "/" in run_id or run_id.startswith("."):
            raise StoreError(f"invalid run id: {run_id!r}")
        return self.root / run_id

    def exists(self, run_id: str) -> bool:
        return (self.run_dir(run_id) / "record.json").exists()

    def create_run(self, record: RunRecord) -> Path:
        run_dir = self.run_dir(record.run_id)
        if (run_dir / "record.json").exists():
            raise StoreError(f"run already exists: {record.run_id}")
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "verdicts").mkdir(exist_ok=True)
        self.save_record(record)
        return run_dir

    def save_record(self, record: RunRecord):
        if record.status not in STATUSES:
            raise StoreError(f"invalid status: {record.status}")
        record.updated_at = time.time()
        write_json(self.run_dir(record.run_id) / "record.json", record.to_dict())

    def load_record(self, run_id: str) -> RunRecord:
        path = self.run_dir(run_id) / "record.json"
        if not path.exists():
            raise RunNotFoundError(f"no such run: {run_id}")
        return RunRecord.from_dict(json.loads(path.read_text()))

    def list_runs(self) -> list[RunRecord]:
        records = []
        if not self.root.exists():
            return records
        for child in sorted(self.root.iterdir()):
            if (child / "record.json").exists():
                records.append(self.load_record(child.name))
        return records

    # -- artifacts -------------------------------------------------------------

    def write_artifact(self, run_id: str, name: str, doc) -> str:
        path = self.run_dir(run_id) / name
        write_json(path, doc)
        return name

    def read_artifact(self, run_id: str, name: str):
        path = self.run_dir(run_id) / name
        if not path.exists():
            raise RunNotFoundError(f"artifact {name} missing for run {run_id}")
        return json.loads(path.read_text())

    def has_artifact(self, run_id: str, name: str) -> bool:
        return (self.run_dir(run_id) / name).exists()

    # -- events ----------------------------------------------------------------

    def append_event(self, run_id: str, kind: str, data: dict | None = None):
        path = self.run_dir(run_id) / "events.jsonl"
        seq = 0
        if path.exists():
            with open(path) as fh:
                seq = sum(1 for _ in fh)
        event = {"seq": seq, "at": time.time(), "kind": kind, "data": data or {}}
        with open(path, "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def read_events(self, run_id: str, after: int = -1) -> list[dict]:
        path = self.run_dir(run_id) / "events.jsonl"
        if not path.exists():
            return []
        events = [json.loads(line) for line in path.read_text().splitlines() if line]
        return [e for e in events if e["seq"] > after]

    # -- approval --------------------------------------------------------------

    def verdict_path(self, run_id: str, iteration: int) -> Path:
        return self.run_dir(run_id) / "verdicts" / f"{iteration:04d}.json"

    def read_verdict(self, run_id: str, iteration: int) -> dict | None:
        path = self.verdict_path(run_id, iteration)
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def commit_verdict(self, run_id: str, iteration: int, verdict: str,
                       reviewer: str, note: str = "") -> dict:
        if verdict not in ("PASS", "REVISE"):
            raise StoreError(f"verdict must be PASS or REVISE, got {verdict!r}")
        if not self.exists(run_id):
            raise RunNotFoundError(f"no such run: {run_id}")
        path = self.verdict_path(run_id, iteration)
        if path.exists():
            raise VerdictConflictError(
                f"verdict already committed for run {run_id} iteration {iteration}")
        path.parent.mkdir(exist_ok=True)
        doc = {"run_id": run_id, "iteration": iteration, "verdict": verdict,
               "reviewer": reviewer, "note": note, "at": time.time()}
        write_json(path, doc)
        self.append_event(run_id, "verdict-committed",
                          {"iteration": iteration, "verdict": verdict,
                           "reviewer": reviewer})
        return doc

    def pending_iteration(self, run_id: str) -> int | None:
        """Iteration awaiting a verdict, if the run is parked."""
        record = self.load_record(run_id)
        if record.status not in ("awaiting-approval", "paused"):
            return None
        if not self.has_artifact(run_id, "state.json"):
            return None
        state = self.read_artifact(run_id, "state.json")
        return int(state.get("iteration", 0))
