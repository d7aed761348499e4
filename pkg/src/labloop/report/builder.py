"""Assemble the four-part data report: structure, quality, semantics, dependency."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from ..errors import ReportError
from ..probe.probes import ProbeResult, SchemaDescriptor, StatsFingerprint
from ..probe.runner import ProbeRun
from .dependency import DEFAULT_OVERLAP_THRESHOLD, DependencyGraph, extract_dependencies
from .quality import (
    DEFAULT_OUTLIER_THRESHOLD,
    QualityEntry,
    constraint_violations,
    missing_rate,
    outlier_mass,
)
from .semantics import FieldFacts, SemanticBinding, bind_roles

TABULAR_FORMATS = frozenset({"csv", "tsv", "jsonl", "parquet"})


@dataclass
class ReportOptions:
    outlier_threshold: float = DEFAULT_OUTLIER_THRESHOLD
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD
    use_judge: bool = True

    def to_dict(self) -> dict:
        return {
            "outlier_threshold": self.outlier_threshold,
            "overlap_threshold": self.overlap_threshold,
            "use_judge": self.use_judge,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReportOptions":
        return cls(d["outlier_threshold"], d["overlap_threshold"], d["use_judge"])


@dataclass
class StructureEntry:
    leaf: str
    format_id: str
    schema: SchemaDescriptor
    stats: StatsFingerprint

    def to_dict(self) -> dict:
        return {
            "leaf": self.leaf,
            "format": self.format_id,
            "schema": self.schema.to_dict(),
            "stats": self.stats.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StructureEntry":
        return cls(d["leaf"], d["format"],
                   SchemaDescriptor.from_dict(d["schema"]),
                   StatsFingerprint.from_dict(d["stats"]))


@dataclass
class DataReport:
    dataset_digest: str
    query: str
    structure: list[StructureEntry]
    unparsable: dict[str, str]
    quality: list[QualityEntry]
    semantics: list[SemanticBinding]
    dependency: DependencyGraph
    options: ReportOptions = dc_field(default_factory=ReportOptions)

    def field_ids(self) -> set[str]:
        return {f"{entry.leaf}::{f.name}"
                for entry in self.structure for f in entry.schema.fields}

    def roles(self) -> dict[str, list[str]]:
        """Role -> field ids, the lookup downstream consumers use."""
        table: dict[str, list[str]] = {}
        for binding in self.semantics:
            table.setdefault(binding.role, []).append(binding.field_id)
        return table

    def to_document(self) -> dict:
        return {
            "version": "report.v1",
            "dataset_digest": self.dataset_digest,
            "query": self.query,
            "structure": [e.to_dict() for e in self.structure],
            "unparsable": dict(self.unparsable),
            "quality": [q.to_dict() for q in self.quality],
            "semantics": [s.to_dict() for s in self.semantics],
            "dependency": self.dependency.to_dict(),
            "options": self.options.to_dict(),
        }

    @classmethod
    def from_document(cls, d: dict) -> "DataReport":
        if d.get("version") != "report.v1":
            raise ReportError(f"unsupported report version: {d.get('version')}")
        return cls(
            dataset_digest=d["dataset_digest"],
            query=d["query"],
            structure=[StructureEntry.from_dict(e) for e in d["structure"]],
            unparsable=dict(d["unparsable"]),
            quality=[QualityEntry.from_dict(q) for q in d["quality"]],
            semantics=[SemanticBinding.from_dict(s) for s in d["semantics"]],
            dependency=DependencyGraph.from_dict(d["dependency"]),
            options=ReportOptions.from_dict(d["options"]),
        )


def _quality_for(leaf: str, result: ProbeResult, threshold: float) -> list[QualityEntry]:
    entries = []
    for schema_field in result.schema.fields:
        cells = result.columns.get(schema_field.name)
        if cells is None or not cells:
            continue
        rate = missing_rate(cells)
        mass = 0.0
        if schema_field.semantic_type in ("integer", "real"):
            stats_field = result.stats.field(schema_field.name)
            if stats_field.mean is not None:
                mass = outlier_mass(cells, threshold)
        entries.append(QualityEntry(
            field_id=f"{leaf}::{schema_field.name}",
            missing_rate=rate,
            outlier_mass=mass,
            violations=constraint_violations(cells, schema_field.semantic_type),
        ))
    return entries


def build_report(run: ProbeRun, query: str, idea: str = "", gateway=None,
                 options: ReportOptions | None = None) -> DataReport:
    """Aggregate per-leaf probe results into the full report.

    All four parts are populated; the result serializes and reloads
    bit-exactly.  Raises when nothing was parsable.
    """
    options = options or ReportOptions()
    if not run.results:
        raise ReportError("no probed leaves")

    structure = [
        StructureEntry(leaf, run.labels.get(leaf, "unknown"),
                       result.schema, result.stats)
        for leaf, result in run.results.items()
    ]

    facts = []
    for entry in structure:
        for schema_field in entry.schema.fields:
            stats_field = entry.stats.field(schema_field.name)
            facts.append(FieldFacts(
                field_id=f"{entry.leaf}::{schema_field.name}",
                name=schema_field.name,
                semantic_type=schema_field.semantic_type,
                cardinality=stats_field.cardinality,
                row_count=entry.schema.row_count,
            ))
    semantics = bind_roles(facts, query, idea, gateway=gateway,
                           use_judge=options.use_judge and gateway is not None)

    quality: list[QualityEntry] = []
    tabular_leaves = []
    for entry in structure:
        if entry.format_id in TABULAR_FORMATS:
            tabular_leaves.append(entry.leaf)
            quality.extend(_quality_for(entry.leaf, run.results[entry.leaf],
                                        options.outlier_threshold))

    dependency = extract_dependencies(run.results, options.overlap_threshold,
                                      leaves=tabular_leaves)

    return DataReport(
        dataset_digest=run.dataset_digest(),
        query=query,
        structure=structure,
        unparsable=dict(run.failures),
        quality=quality,
        semantics=semantics,
        dependency=dependency,
        options=options,
    )
