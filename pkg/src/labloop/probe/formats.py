"""Format registry: extension and magic-byte detection.

Extension match wins, then magic bytes, then the Unknown fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

UNKNOWN = "unknown"


@dataclass(frozen=True)
class FormatSpec:
    format_id: str
    extensions: tuple[str, ...]     # lowercase, without the dot
    magics: tuple[bytes, ...] = ()

    def matches_extension(self, name: str) -> bool:
        lowered = name.lower()
        return any(lowered.endswith("." + ext) for ext in self.extensions)

    def matches_magic(self, head: bytes) -> bool:
        return any(head.startswith(magic) for magic in self.magics if magic)


class FormatRegistry:
    """Ordered format catalogue; Unknown is always present."""

    def __init__(self):
        self._specs: dict[str, FormatSpec] = {}

    def register(self, spec: FormatSpec):
        if spec.format_id in self._specs:
            raise ValueError(f"duplicate format id: {spec.format_id}")
        if spec.format_id != UNKNOWN and not spec.extensions and not spec.magics:
            raise ValueError(f"format {spec.format_id} has no matchers")
        self._specs[spec.format_id] = spec

    def __contains__(self, format_id: str) -> bool:
        return format_id == UNKNOWN or format_id in self._specs

    def format_ids(self) -> list[str]:
        return list(self._specs) + [UNKNOWN]

    def detect(self, name: str, head: bytes) -> str:
        for spec in self._specs.values():
            if spec.matches_extension(name):
                return spec.format_id
        for spec in self._specs.values():
            if spec.matches_magic(head):
                return spec.format_id
        return UNKNOWN

    def restricted(self, keep: list[str]) -> "FormatRegistry":
        subset = FormatRegistry()
        for format_id, spec in self._specs.items():
            if format_id in keep:
                subset.register(spec)
        return subset


def builtin_registry() -> FormatRegistry:
    registry = FormatRegistry()
    registry.register(FormatSpec("csv", ("csv",)))
    registry.register(FormatSpec("tsv", ("tsv",)))
    registry.register(FormatSpec("jsonl", ("jsonl", "ndjson")))
    registry.register(FormatSpec("parquet", ("parquet", "pq"), (b"PAR1",)))
    registry.register(FormatSpec("tiff", ("tif", "tiff"), (b"II*\x00", b"MM\x00*")))
    registry.register(FormatSpec("png", ("png",), (b"\x89PNG\r\n\x1a\n",)))
    registry.register(FormatSpec("text", ("txt", "text", "log", "md")))
    return registry


def detect_format(name: str, head: bytes, registry: FormatRegistry | None = None) -> str:
    registry = registry or builtin_registry()
    return registry.detect(name, head)
