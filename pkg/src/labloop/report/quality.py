"""Per-field quality metrics: missing rate, robust outlier mass, constraints.

Outliers use the modified z-score 0.6745 * (x - median) / MAD with the
standard 3.5 threshold.  When MAD is zero (constant-plus-spike columns) any
value different from the median counts as an outlier, so spikes still get
flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime

import numpy as np

from ..errors import ReportError
from ..probe.probes import is_missing

MODIFIED_Z_FACTOR = 0.6745
DEFAULT_OUTLIER_THRESHOLD = 3.5

# A rule only fires when violations are rare (the field clearly "wants" the
# constraint); noisy fields should not drown the report in false alarms.
CONSTRAINT_TOLERANCE = 0.01


@dataclass
class QualityEntry:
    field_id: str
    missing_rate: float
    outlier_mass: float
    violations: list[tuple[str, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "field_id": self.field_id,
            "missing_rate": self.missing_rate,
            "outlier_mass": self.outlier_mass,
            "violations": [[rule, count] for rule, count in self.violations],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QualityEntry":
        return cls(d["field_id"], d["missing_rate"], d["outlier_mass"],
                   [(rule, count) for rule, count in d["violations"]])


def missing_rate(values) -> float:
    """Fraction of missing markers in a field; empty fields are an error."""
    if len(values) == 0:
        raise ReportError("zero-length field")
    missing = sum(1 for v in values if is_missing(v))
    return missing / len(values)


def _numeric(values) -> list[float]:
    out = []
    for v in values:
        if is_missing(v):
            continue
        try:
            out.append(float(str(v).strip()))
        except ValueError:
            continue
    return out


def outlier_mass(values, threshold: float = DEFAULT_OUTLIER_THRESHOLD) -> float:
    """Fraction of numeric values flagged by the modified z-score rule."""
    numeric = _numeric(values)
    if not numeric:
        raise ReportError("non-numeric field")
    arr = np.asarray(numeric, dtype=np.float64)
    median = float(np.median(arr))
    mad = float(np.median(np.abs(arr - median)))
    if mad == 0.0:
        flagged = int(np.count_nonzero(arr != median))
    else:
        z = MODIFIED_Z_FACTOR * (arr - median) / mad
        flagged = int(np.count_nonzero(np.abs(z) > threshold))
    return flagged / arr.size


def _parse_timestamp(value) -> datetime | None:
    text = str(value).strip()
    if text.endswith("Z"):
        text = text[:-1]
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        pass
    try:
        parsed = date.fromisoformat(text)
        return datetime(parsed.year, parsed.month, parsed.day)
    except ValueError:
        return None


def constraint_violations(values, semantic_type: str) -> list[tuple[str, int]]:
    """Launch rule set: non-negativity and timestamp monotonicity.

    A rule fires only when the field is within tolerance of satisfying it,
    i.e. the violations look like defects rather than the field's nature.
    """
    violations: list[tuple[str, int]] = []
    if semantic_type in ("integer", "real"):
        numeric = _numeric(values)
        if numeric:
            negatives = sum(1 for x in numeric if x < 0)
            if 0 < negatives <= CONSTRAINT_TOLERANCE * len(numeric):
                violations.append(("non-negative", negatives))
    elif semantic_type == "timestamp":
        parsed = [t for t in (_parse_timestamp(v) for v in values if not is_missing(v))
                  if t is not None]
        pairs = len(parsed) - 1
        if pairs > 0:
            decreasing = sum(1 for a, b in zip(parsed, parsed[1:]) if b < a)
            if 0 < decreasing <= CONSTRAINT_TOLERANCE * pairs:
                violations.append(("timestamp-monotone", decreasing))
    return violations
