"""Format-specific probes.

Every probe is a pure function of file bytes: no clock, no path, no
environment.  Output is a typed schema plus a fixed-shape statistical
fingerprint -- the same slot layout for every field of every format, with
numeric slots left empty for non-numeric fields.  Probes also retain the
raw column cells (row order preserved) so later stages can compute quality
metrics and cross-file dependencies without re-reading files.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass
from datetime import date, datetime

import numpy as np

from ..errors import ProbeFailure

MISSING_TOKENS = frozenset({"", "na", "nan", "null"})
BOOL_TOKENS = frozenset({"true", "false", "yes", "no"})

TYPE_THRESHOLD = 0.95       # fraction of non-missing cells that must parse
CATEGORICAL_FLOOR = 20      # cardinality <= max(20, 5% of rows) => categorical
TOP_K = 10                  # frequent-value slots per field
SAMPLE_BYTE_LIMIT = 64 * 1024 * 1024
SAMPLE_RECORDS = 100_000


def is_missing(cell) -> bool:
    if cell is None:
        return True
    if isinstance(cell, str):
        return cell.strip().lower() in MISSING_TOKENS
    return False


@dataclass(frozen=True)
class FieldSchema:
    name: str
    semantic_type: str  # integer | real | boolean | categorical | text | timestamp | binary

    def to_dict(self) -> dict:
        return {"name": self.name, "semantic_type": self.semantic_type}


@dataclass(frozen=True)
class SchemaDescriptor:
    fields: tuple[FieldSchema, ...]
    row_count: int | None            # absent for non-tabular formats
    raster_dims: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        return {
            "fields": [f.to_dict() for f in self.fields],
            "row_count": self.row_count,
            "raster_dims": list(self.raster_dims) if self.raster_dims else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SchemaDescriptor":
        return cls(
            fields=tuple(FieldSchema(f["name"], f["semantic_type"]) for f in d["fields"]),
            row_count=d.get("row_count"),
            raster_dims=tuple(d["raster_dims"]) if d.get("raster_dims") else None,
        )


@dataclass(frozen=True)
class FieldStats:
    """One field's fingerprint slice.  Identical slot set for every field."""

    name: str
    cardinality: int
    missing_rate: float
    minimum: float | str | None
    maximum: float | str | None
    mean: float | None
    variance: float | None
    skewness: float | None
    kurtosis: float | None
    top_values: tuple[tuple[str, int], ...]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "cardinality": self.cardinality,
            "missing_rate": self.missing_rate,
            "minimum": self.minimum,
            "maximum": self.maximum,
            "mean": self.mean,
            "variance": self.variance,
            "skewness": self.skewness,
            "kurtosis": self.kurtosis,
            "top_values": [[v, c] for v, c in self.top_values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FieldStats":
        return cls(
            name=d["name"],
            cardinality=d["cardinality"],
            missing_rate=d["missing_rate"],
            minimum=d["minimum"],
            maximum=d["maximum"],
            mean=d["mean"],
            variance=d["variance"],
            skewness=d["skewness"],
            kurtosis=d["kurtosis"],
            top_values=tuple((v, c) for v, c in d["top_values"]),
        )


@dataclass(frozen=True)
class StatsFingerprint:
    fields: tuple[FieldStats, ...]
    sampled: bool = False

    def field(self, name: str) -> FieldStats:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"fields": [f.to_dict() for f in self.fields], "sampled": self.sampled}

    @classmethod
    def from_dict(cls, d: dict) -> "StatsFingerprint":
        return cls(fields=tuple(FieldStats.from_dict(f) for f in d["fields"]),
                   sampled=d["sampled"])


@dataclass(frozen=True)
class ProbeResult:
    schema: SchemaDescriptor
    stats: StatsFingerprint
    # Raw cells per field, row order preserved; None marks a missing cell.
    # Empty for raster formats.
    columns: dict[str, list]

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.to_dict(),
            "stats": self.stats.to_dict(),
            "columns": self.columns,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeResult":
        return cls(
            schema=SchemaDescriptor.from_dict(d["schema"]),
            stats=StatsFingerprint.from_dict(d["stats"]),
            columns={k: list(v) for k, v in d["columns"].items()},
        )


# -- type inference ----------------------------------------------------------

def _parses_int(s: str) -> bool:
    try:
        int(s.strip())
        return True
    except ValueError:
        return False


def _parses_float(s: str) -> bool:
    try:
        float(s.strip())
        return True
    except ValueError:
        return False


def _parses_timestamp(s: str) -> bool:
    text = s.strip()
    if text.endswith("Z"):
        text = text[:-1]
    for parser in (datetime.fromisoformat, date.fromisoformat):
        try:
            parser(text)
            return True
        except ValueError:
            pass
    return False


def infer_semantic_type(non_missing: list[str], row_count: int) -> str:
    if not non_missing:
        return "text"
    n = len(non_missing)

    def fraction(pred) -> float:
        return sum(1 for v in non_missing if pred(v)) / n

    if fraction(lambda v: v.strip().lower() in BOOL_TOKENS) >= TYPE_THRESHOLD:
        return "boolean"
    if fraction(_parses_int) >= TYPE_THRESHOLD:
        return "integer"
    if fraction(_parses_float) >= TYPE_THRESHOLD:
        return "real"
    if fraction(_parses_timestamp) >= TYPE_THRESHOLD:
        return "timestamp"
    if len(set(non_missing)) <= max(CATEGORICAL_FLOOR, 0.05 * row_count):
        return "categorical"
    return "text"


# -- statistics ---------------------------------------------------------------

def population_moments(values: np.ndarray) -> tuple[float, float, float, float]:
    """Mean, population variance, skewness, excess kurtosis.

    Constant columns get skewness/kurtosis 0.0 by convention.
    """
    mean = float(values.mean())
    deviations = values - mean
    m2 = float((deviations**2).mean())
    if m2 == 0.0:
        return mean, 0.0, 0.0, 0.0
    m3 = float((deviations**3).mean())
    m4 = float((deviations**4).mean())
    return mean, m2, m3 / m2**1.5, m4 / m2**2 - 3.0


def column_stats(name: str, cells: list, semantic_type: str) -> FieldStats:
    non_missing = [c for c in cells if not is_missing(c)]
    total = len(cells)
    missing_rate = (total - len(non_missing)) / total if total else 0.0
    counts = Counter(str(c) for c in non_missing)
    top = tuple(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:TOP_K])

    minimum = maximum = mean = variance = skewness = kurtosis = None
    if semantic_type in ("integer", "real"):
        numeric = []
        for c in non_missing:
            try:
                numeric.append(float(str(c).strip()))
            except ValueError:
                continue  # junk cells below the 5% tolerance
        if numeric:
            arr = np.asarray(numeric, dtype=np.float64)
            minimum = float(arr.min())
            maximum = float(arr.max())
            mean, variance, skewness, kurtosis = population_moments(arr)
    elif non_missing:
        as_text = [str(c) for c in non_missing]
        minimum = min(as_text)
        maximum = max(as_text)

    return FieldStats(
        name=name,
        cardinality=len(counts),
        missing_rate=missing_rate,
        minimum=minimum,
        maximum=maximum,
        mean=mean,
        variance=variance,
        skewness=skewness,
        kurtosis=kurtosis,
        top_values=top,
    )


def _dedupe_names(names: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for raw in names:
        name = raw if raw else "field"
        if name in seen:
            seen[name] += 1
            out.append(f"{name}.{seen[name]}")
        else:
            seen[name] = 1
            out.append(name)
    return out


def _tabular_result(names: list[str], columns: list[list], row_count: int,
                    sampled: bool, declared_types: dict[str, str] | None = None
                    ) -> ProbeResult:
    names = _dedupe_names(names)
    declared_types = declared_types or {}
    fields, stats = [], []
    for name, cells in zip(names, columns):
        semantic = declared_types.get(name)
        if semantic is None:
            non_missing = [str(c) for c in cells if not is_missing(c)]
            semantic = infer_semantic_type(non_missing, row_count)
        fields.append(FieldSchema(name, semantic))
        stats.append(column_stats(name, cells, semantic))
    return ProbeResult(
        schema=SchemaDescriptor(fields=tuple(fields), row_count=row_count),
        stats=StatsFingerprint(fields=tuple(stats), sampled=sampled),
        columns={name: cells for name, cells in zip(names, columns)},
    )


# -- per-format probes ---------------------------------------------------------

def _decode(data: bytes) -> str:
    return data.decode("utf-8", errors="replace")


def probe_delimited(data: bytes, delimiter: str = ",") -> ProbeResult:
    if not data:
        raise ProbeFailure("empty content")
    sampled = len(data) > SAMPLE_BYTE_LIMIT
    reader = csv.reader(io.StringIO(_decode(data)), delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise ProbeFailure("empty content") from None
    except csv.Error as exc:
        raise ProbeFailure(f"malformed delimited content: {exc}") from None
    width = len(header)
    if width == 0:
        raise ProbeFailure("header row has no fields")
    columns: list[list] = [[] for _ in range(width)]
    row_count = 0
    try:
        for row in reader:
            if sampled and row_count >= SAMPLE_RECORDS:
                break
            for i in range(width):
                cell = row[i] if i < len(row) else None
                columns[i].append(None if cell is None or is_missing(cell) else cell)
            row_count += 1
    except csv.Error as exc:
        raise ProbeFailure(f"malformed delimited content at row {row_count + 1}: {exc}") from None
    return _tabular_result(header, columns, row_count, sampled)


def probe_csv(data: bytes) -> ProbeResult:
    return probe_delimited(data, ",")


def probe_tsv(data: bytes) -> ProbeResult:
    return probe_delimited(data, "\t")


def _json_cell(value):
    if value is None:
        return None
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return None if is_missing(value) else value
    return json.dumps(value, sort_keys=True)


def probe_jsonl(data: bytes) -> ProbeFailure | ProbeResult:
    if not data:
        raise ProbeFailure("empty content")
    sampled = len(data) > SAMPLE_BYTE_LIMIT
    names: list[str] = []
    rows: list[dict] = []
    for lineno, line in enumerate(_decode(data).splitlines(), start=1):
        if not line.strip():
            continue
        if sampled and len(rows) >= SAMPLE_RECORDS:
            break
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProbeFailure(f"invalid json on line {lineno}: {exc.msg}") from None
        if not isinstance(record, dict):
            raise ProbeFailure(f"line {lineno} is not an object")
        for key in record:
            if key not in names:
                names.append(key)
        rows.append(record)
    if not rows:
        raise ProbeFailure("no records")
    columns = [[_json_cell(row.get(name)) for row in rows] for name in names]
    return _tabular_result(names, columns, len(rows), sampled)


_ARROW_TYPE_MAP = [
    ("is_boolean", "boolean"),
    ("is_integer", "integer"),
    ("is_floating", "real"),
    ("is_decimal", "real"),
    ("is_timestamp", "timestamp"),
    ("is_date", "timestamp"),
    ("is_binary", "binary"),
    ("is_large_binary", "binary"),
]


def probe_parquet(data: bytes) -> ProbeResult:
    import pyarrow as pa
    import pyarrow.parquet as pq

    if not data:
        raise ProbeFailure("empty content")
    sampled = len(data) > SAMPLE_BYTE_LIMIT
    try:
        table = pq.read_table(pa.BufferReader(data))
    except pa.ArrowInvalid as exc:
        raise ProbeFailure(f"invalid parquet: {exc}") from None
    if sampled:
        table = table.slice(0, SAMPLE_RECORDS)

    import pyarrow.types as pat

    names = list(table.column_names)
    declared: dict[str, str] = {}
    columns: list[list] = []
    for name in names:
        arrow_column = table.column(name)
        arrow_type = arrow_column.type
        semantic = None
        for checker, label in _ARROW_TYPE_MAP:
            if getattr(pat, checker)(arrow_type):
                semantic = label
                break
        cells = []
        for value in arrow_column.to_pylist():
            if value is None:
                cells.append(None)
            elif isinstance(value, bool):
                cells.append("true" if value else "false")
            elif isinstance(value, bytes):
                cells.append(value.hex())
            elif isinstance(value, (datetime, date)):
                cells.append(value.isoformat())
            elif isinstance(value, (int, float)):
                cells.append(repr(value))
            elif isinstance(value, str):
                cells.append(None if is_missing(value) else value)
            else:
                cells.append(json.dumps(value, sort_keys=True, default=str))
        if semantic is not None:
            declared[name] = semantic
        columns.append(cells)
    return _tabular_result(names, columns, table.num_rows, sampled,
                           declared_types=declared)


def probe_image(data: bytes) -> ProbeResult:
    from PIL import Image, UnidentifiedImageError

    if not data:
        raise ProbeFailure("empty content")
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.load()
            width, height = img.size
            bands = img.getbands()
            pixels = np.asarray(img)
    except (UnidentifiedImageError, OSError) as exc:
        raise ProbeFailure(f"unreadable image: {exc}") from None

    if pixels.ndim == 2:
        pixels = pixels[:, :, np.newaxis]
    is_float = pixels.dtype.kind == "f"
    fields, stats = [], []
    for index, band in enumerate(bands):
        values = pixels[:, :, index].ravel().astype(np.float64)
        mean, variance, skewness, kurtosis = population_moments(values)
        unique, counts = np.unique(values, return_counts=True)
        order = sorted(range(len(unique)), key=lambda i: (-counts[i], str(unique[i])))
        top = tuple((_render_pixel(unique[i], is_float), int(counts[i]))
                    for i in order[:TOP_K])
        name = f"band:{band}"
        fields.append(FieldSchema(name, "real" if is_float else "integer"))
        stats.append(FieldStats(
            name=name,
            cardinality=len(unique),
            missing_rate=0.0,
            minimum=float(values.min()),
            maximum=float(values.max()),
            mean=mean,
            variance=variance,
            skewness=skewness,
            kurtosis=kurtosis,
            top_values=top,
        ))
    return ProbeResult(
        schema=SchemaDescriptor(fields=tuple(fields), row_count=None,
                                raster_dims=(width, height)),
        stats=StatsFingerprint(fields=tuple(stats), sampled=False),
        columns={},
    )


def _render_pixel(value: np.floating, is_float: bool) -> str:
    return repr(float(value)) if is_float else str(int(value))


def probe_text(data: bytes) -> ProbeResult:
    if not data:
        raise ProbeFailure("empty content")
    sampled = len(data) > SAMPLE_BYTE_LIMIT
    lines = _decode(data).splitlines()
    if sampled:
        lines = lines[:SAMPLE_RECORDS]
    line_cells = [None if is_missing(line) else line for line in lines]
    length_cells = [str(len(line)) for line in lines]
    return _tabular_result(
        ["line", "line_length"], [line_cells, length_cells], len(lines), sampled,
        declared_types={"line": "text", "line_length": "integer"},
    )


PROBES = {
    "csv": probe_csv,
    "tsv": probe_tsv,
    "jsonl": probe_jsonl,
    "parquet": probe_parquet,
    "tiff": probe_image,
    "png": probe_image,
    "text": probe_text,
}


def probe_leaf(data: bytes, format_id: str) -> ProbeResult:
    """Run the registered probe for a format over raw bytes.

    Raises ProbeFailure for malformed content and for unregistered formats;
    callers record the failure and keep going.
    """
    probe = PROBES.get(format_id)
    if probe is None:
        raise ProbeFailure(f"no probe registered for format '{format_id}'")
    return probe(data)
