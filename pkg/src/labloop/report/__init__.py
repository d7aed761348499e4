from .quality import QualityEntry, constraint_violations, missing_rate, outlier_mass
from .semantics import ROLES, SemanticBinding, bind_roles, heuristic_roles
from .dependency import DependencyGraph, DepEdge, extract_dependencies, jaccard
from .builder import DataReport, ReportOptions, StructureEntry, build_report

__all__ = [
    "QualityEntry",
    "constraint_violations",
    "missing_rate",
    "outlier_mass",
    "ROLES",
    "SemanticBinding",
    "bind_roles",
    "heuristic_roles",
    "DependencyGraph",
    "DepEdge",
    "extract_dependencies",
    "jaccard",
    "DataReport",
    "ReportOptions",
    "StructureEntry",
    "build_report",
]
