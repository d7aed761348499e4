"""Cross-field dependency graph: key matches, shared timestamps, value overlap."""

from __future__ import annotations

from dataclasses import dataclass

from ..probe.probes import ProbeResult, is_missing
from .quality import _parse_timestamp

DEFAULT_OVERLAP_THRESHOLD = 0.8
KEY_DISTINCT_RATIO = 0.95
# Types a key column can infer as; short unique string ids come out categorical.
KEYABLE_TYPES = ("integer", "text", "categorical")


@dataclass(frozen=True)
class DepEdge:
    a: str
    b: str
    kind: str           # key-match | shared-timestamp | value-overlap
    strength: float

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "kind": self.kind, "strength": self.strength}

    @classmethod
    def from_dict(cls, d: dict) -> "DepEdge":
        return cls(d["a"], d["b"], d["kind"], d["strength"])


@dataclass(frozen=True)
class DependencyGraph:
    nodes: tuple[str, ...]
    edges: tuple[DepEdge, ...]

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "edges": [e.to_dict() for e in self.edges]}

    @classmethod
    def from_dict(cls, d: dict) -> "DependencyGraph":
        return cls(tuple(d["nodes"]), tuple(DepEdge.from_dict(e) for e in d["edges"]))


def jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 0.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


@dataclass(frozen=True)
class _FieldView:
    field_id: str
    semantic_type: str
    distinct: frozenset
    key_like: bool
    ts_range: tuple | None


def _views(results: dict[str, ProbeResult], leaves: list[str]) -> list[_FieldView]:
    views = []
    for leaf in sorted(leaves):
        result = results[leaf]
        row_count = result.schema.row_count or 0
        for schema_field in result.schema.fields:
            cells = result.columns.get(schema_field.name)
            if cells is None:
                continue
            distinct = frozenset(str(c) for c in cells if not is_missing(c))
            key_like = (schema_field.semantic_type in KEYABLE_TYPES
                        and row_count > 0
                        and len(distinct) >= KEY_DISTINCT_RATIO * row_count)
            ts_range = None
            if schema_field.semantic_type == "timestamp" and distinct:
                parsed = [t for t in (_parse_timestamp(v) for v in distinct) if t is not None]
                if parsed:
                    ts_range = (min(parsed), max(parsed))
            views.append(_FieldView(
                field_id=f"{leaf}::{schema_field.name}",
                semantic_type=schema_field.semantic_type,
                distinct=distinct,
                key_like=key_like,
                ts_range=ts_range,
            ))
    return views


def _interval_jaccard(r1: tuple, r2: tuple) -> float:
    lo = max(r1[0], r2[0])
    hi = min(r1[1], r2[1])
    if lo > hi:
        return 0.0
    union_lo = min(r1[0], r2[0])
    union_hi = max(r1[1], r2[1])
    union_seconds = (union_hi - union_lo).total_seconds()
    if union_seconds == 0:
        return 1.0  # both ranges collapse to the same instant
    return (hi - lo).total_seconds() / union_seconds


def extract_dependencies(results: dict[str, ProbeResult],
                         threshold: float = DEFAULT_OVERLAP_THRESHOLD,
                         leaves: list[str] | None = None) -> DependencyGraph:
    """Pairwise field comparison over tabular leaves.

    value-overlap: Jaccard of distinct value sets at or above the threshold.
    key-match: one field's distinct values cover a key-like field's values.
    shared-timestamp: two timestamp fields whose value ranges intersect.

    An empty graph is a valid result.  Edges are canonically ordered
    (endpoints sorted, then by kind) so output is deterministic.
    """
    leaves = leaves if leaves is not None else list(results)
    views = _views(results, [leaf for leaf in leaves if leaf in results])
    nodes = tuple(v.field_id for v in views)
    edges: set[DepEdge] = set()
    for i in range(len(views)):
        for j in range(i + 1, len(views)):
            x, y = views[i], views[j]
            if x.distinct and y.distinct:
                overlap = jaccard(set(x.distinct), set(y.distinct))
                if overlap >= threshold:
                    edges.add(DepEdge(x.field_id, y.field_id, "value-overlap", overlap))
                if (x.key_like and x.distinct <= y.distinct) or \
                   (y.key_like and y.distinct <= x.distinct):
                    edges.add(DepEdge(x.field_id, y.field_id, "key-match", 1.0))
            if x.ts_range and y.ts_range:
                strength = _interval_jaccard(x.ts_range, y.ts_range)
                overlaps = x.ts_range[0] <= y.ts_range[1] and y.ts_range[0] <= x.ts_range[1]
                if overlaps:
                    edges.add(DepEdge(x.field_id, y.field_id, "shared-timestamp", strength))
    ordered = tuple(sorted(edges, key=lambda e: (e.kind, e.a, e.b)))
    return DependencyGraph(nodes=nodes, edges=ordered)
