"""Content-addressed probe cache.

Keys are digests of raw file bytes, so renames stay cached and identical
files resolve to one entry.  Probes are pure, so concurrent inserts of the
same key are harmless (last write wins with identical payloads).
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path

from .probes import ProbeResult


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class ProbeCache:
    """In-memory map with optional directory persistence."""

    def __init__(self, directory: Path | str | None = None):
        self.directory = Path(directory) if directory else None
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._memory: dict[str, dict] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _entry_path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def lookup(self, digest: str) -> dict | None:
        """Raw cache entry: {'result': ...} or {'failure': reason}, or None."""
        with self._lock:
            entry = self._memory.get(digest)
        if entry is None and self.directory:
            path = self._entry_path(digest)
            if path.exists():
                try:
                    entry = json.loads(path.read_text())
                except (OSError, json.JSONDecodeError):
                    entry = None
                if entry is not None:
                    with self._lock:
                        self._memory[digest] = entry
        with self._lock:
            if entry is None:
                self.misses += 1
            else:
                self.hits += 1
        return entry

    def store_result(self, digest: str, result: ProbeResult):
        self._store(digest, {"result": result.to_dict()})

    def store_failure(self, digest: str, reason: str):
        self._store(digest, {"failure": reason})

    def _store(self, digest: str, entry: dict):
        with self._lock:
            self._memory[digest] = entry
        if self.directory:
            path = self._entry_path(digest)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(entry, sort_keys=True))
            os.replace(tmp, path)

    @staticmethod
    def decode(entry: dict) -> ProbeResult | None:
        if "result" in entry:
            return ProbeResult.from_dict(entry["result"])
        return None
