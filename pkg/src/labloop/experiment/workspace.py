"""Isolated experiment workspace and atomic patch application.

Layout: <root>/code (the mutable codebase), <root>/data (read-only view of
the dataset), <root>/log (append-only execution log, including the numbered
patch history).  Every write the runner performs lands in code or log;
nothing else is ever touched.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

from ..errors import PatchError

PATCH_OPS = ("create", "replace-range", "delete")


@dataclass
class Workspace:
    root: Path
    code_dir: Path
    data_dir: Path | None
    log_dir: Path
    patches_dir: Path

    @classmethod
    def create(cls, root: Path | str, data_source: Path | str | None = None) -> "Workspace":
        root = Path(root)
        code_dir = root / "code"
        log_dir = root / "log"
        patches_dir = log_dir / "patches"
        for d in (code_dir, log_dir, patches_dir):
            d.mkdir(parents=True, exist_ok=True)
        data_dir = None
        if data_source is not None:
            data_dir = root / "data"
            source = Path(data_source).resolve()
            if not data_dir.exists():
                os.symlink(source, data_dir)
        return cls(root=root, code_dir=code_dir, data_dir=data_dir,
                   log_dir=log_dir, patches_dir=patches_dir)

    @classmethod
    def open(cls, root: Path | str) -> "Workspace":
        root = Path(root)
        data_dir = root / "data"
        return cls(root=root, code_dir=root / "code",
                   data_dir=data_dir if data_dir.exists() else None,
                   log_dir=root / "log", patches_dir=root / "log" / "patches")

    def log_event(self, event: dict):
        event = {"at": time.time(), **event}
        with open(self.log_dir / "events.jsonl", "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def stdout_tail(self, n: int = 50) -> list[str]:
        path = self.log_dir / "stdout.log"
        if not path.exists():
            return []
        return path.read_text(errors="replace").splitlines()[-n:]

    def next_patch_seq(self) -> int:
        existing = [p for p in self.patches_dir.glob("*.json")]
        return len(existing) + 1


@dataclass(frozen=True)
class Hunk:
    path: str
    op: str
    content: str = ""
    start_line: int = 0
    end_line: int = 0

    def to_dict(self) -> dict:
        d = {"path": self.path, "op": self.op}
        if self.op in ("create", "replace-range"):
            d["content"] = self.content
        if self.op == "replace-range":
            d["start_line"] = self.start_line
            d["end_line"] = self.end_line
        return d


@dataclass(frozen=True)
class Patch:
    hunks: tuple[Hunk, ...]

    def to_dict(self) -> dict:
        return {"hunks": [h.to_dict() for h in self.hunks]}

    @classmethod
    def from_json(cls, text: str) -> "Patch":
        """Parse a patch reply; tolerates code fences around the JSON."""
        stripped = text.strip()
        if stripped.startswith("```"):
            stripped = stripped.strip("`")
            if stripped.startswith("json"):
                stripped = stripped[4:]
        start = stripped.find("{")
        end = stripped.rfind("}")
        if start < 0 or end <= start:
            raise PatchError("no JSON object in patch reply")
        try:
            payload = json.loads(stripped[start:end + 1])
        except json.JSONDecodeError as exc:
            raise PatchError(f"invalid patch JSON: {exc.msg}") from None
        hunks = []
        for raw in payload.get("hunks", []):
            op = str(raw.get("op", "")).replace("_", "-")
            if op not in PATCH_OPS:
                raise PatchError(f"unknown patch op: {raw.get('op')!r}")
            hunks.append(Hunk(
                path=str(raw.get("path", "")),
                op=op,
                content=str(raw.get("content", "")),
                start_line=int(raw.get("start_line", 0)),
                end_line=int(raw.get("end_line", 0)),
            ))
        return cls(hunks=tuple(hunks))


def _resolve_inside(code_dir: Path, rel: str) -> Path:
    if not rel or rel.strip() == "":
        raise PatchError("hunk path is empty")
    try:
        candidate = Path(rel)
        if candidate.is_absolute():
            raise PatchError(f"absolute path rejected: {rel}")
        target = (code_dir / candidate).resolve()
    except (ValueError, OSError) as exc:
        raise PatchError(f"unresolvable path {rel!r}: {exc}") from None
    if not target.is_relative_to(code_dir.resolve()):
        raise PatchError(f"path escapes codebase: {rel}")
    return target


def apply_patch(workspace: Workspace, patch: Patch) -> int:
    """Apply all hunks or none; returns the recorded sequence number.

    Validation happens entirely before any write.  If a write still fails
    midway, the snapshot of affected files is restored.
    """
    code_dir = workspace.code_dir
    staged: dict[Path, str | None] = {}

    def current(target: Path) -> str | None:
        if target in staged:
            return staged[target]
        if target.exists():
            if target.is_dir():
                raise PatchError(f"path is a directory: {target.name}")
            return target.read_text()
        return None

    for hunk in patch.hunks:
        target = _resolve_inside(code_dir, hunk.path)
        text = current(target)
        if hunk.op == "create":
            if text is not None:
                raise PatchError(f"create conflict, file exists: {hunk.path}")
            staged[target] = hunk.content
        elif hunk.op == "delete":
            if text is None:
                raise PatchError(f"delete of missing file: {hunk.path}")
            staged[target] = None
        else:  # replace-range
            if text is None:
                raise PatchError(f"replace-range on missing file: {hunk.path}")
            lines = text.splitlines()
            if not (1 <= hunk.start_line <= hunk.end_line <= len(lines)):
                context = "\n".join(lines[:5])
                raise PatchError(
                    f"range {hunk.start_line}..{hunk.end_line} out of bounds for "
                    f"{hunk.path} ({len(lines)} lines); head:\n{context}")
            replacement = hunk.content.splitlines()
            lines = lines[:hunk.start_line - 1] + replacement + lines[hunk.end_line:]
            staged[target] = "\n".join(lines) + "\n"

    snapshot: dict[Path, bytes | None] = {}
    for target in staged:
        snapshot[target] = target.read_bytes() if target.exists() else None
    try:
        for target, text in staged.items():
            if text is None:
                target.unlink()
            else:
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(text)
    except OSError as exc:
        for target, blob in snapshot.items():
            try:
                if blob is None:
                    target.unlink(missing_ok=True)
                else:
                    target.write_bytes(blob)
            except OSError:
                continue  # path never came into existence
        raise PatchError(f"write failed, codebase restored: {exc}") from None

    seq = workspace.next_patch_seq()
    record = workspace.patches_dir / f"{seq:04d}.json"
    record.write_text(json.dumps(patch.to_dict(), sort_keys=True, indent=1))
    workspace.log_event({"kind": "patch", "seq": seq, "hunks": len(patch.hunks)})
    return seq


def codebase_digest(workspace: Workspace) -> str:
    """Digest of the source tree under the code directory.

    Bytecode caches are excluded: .pyc headers embed source mtimes, which
    would make otherwise identical codebases hash differently.
    """
    h = hashlib.sha256()
    for path in sorted(workspace.code_dir.rglob("*")):
        if not path.is_file() or path.suffix == ".pyc" or "__pycache__" in path.parts:
            continue
        h.update(str(path.relative_to(workspace.code_dir)).encode())
        h.update(b"\x00")
        h.update(path.read_bytes())
        h.update(b"\x00")
    return h.hexdigest()
