from .formats import UNKNOWN, FormatRegistry, FormatSpec, builtin_registry, detect_format
from .tree import FileTree, scan_tree
from .probes import (
    FieldSchema,
    FieldStats,
    ProbeResult,
    SchemaDescriptor,
    StatsFingerprint,
    is_missing,
    probe_leaf,
)
from .cache import ProbeCache, content_hash
from .runner import ProbeRun, probe_document, probe_tree

__all__ = [
    "UNKNOWN",
    "FormatRegistry",
    "FormatSpec",
    "builtin_registry",
    "detect_format",
    "FileTree",
    "scan_tree",
    "FieldSchema",
    "FieldStats",
    "ProbeResult",
    "SchemaDescriptor",
    "StatsFingerprint",
    "is_missing",
    "probe_leaf",
    "ProbeCache",
    "content_hash",
    "ProbeRun",
    "probe_document",
    "probe_tree",
]
