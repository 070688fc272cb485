"""Threshold ingestion of timestamped CSV logs.

A declarative config names a timestamp column, partition-key columns,
and per-predicate threshold rules.  Consecutive timestamps of one
partition become one interval per the chosen convention: carry-forward
reads the table as step functions that hold their value on
[t_i, t_{i+1}), carry-back as accumulated measurements reported at the
end of (t_i, t_{i+1}].  Values are compared as exact rationals, so
decimal thresholds like 0.15 need not be dyadic; only the timestamps
land in the temporal domain.
"""

import csv
import datetime
import json
import operator
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from dmtl.engine import Row, TemporalTable
from dmtl.language import Atom, DataInstance, Fact, Term
from dmtl.temporal import Interval, NEG_INF, POS_INF, TimePoint

__all__ = [
    "CARRY_BACK",
    "CARRY_FORWARD",
    "IngestConfig",
    "IngestError",
    "MetadataRule",
    "ThresholdRule",
    "as_data_instance",
    "ingest_csv",
    "ingest_metadata_csv",
    "load_config",
    "parse_timestamp",
    "replicate",
]


class IngestError(ValueError):
    """Bad config or malformed CSV content; the message carries the
    CSV line number where that makes sense."""


CARRY_FORWARD = "carry-forward"
CARRY_BACK = "carry-back"

_COMPARATORS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

_PRED_NAME = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")

_FULL = Interval(NEG_INF, False, POS_INF, False)


@dataclass(frozen=True)
class ThresholdRule:
    """Emit `predicate(keys)` over an interval when the governing value
    of its column passes the comparison."""

    predicate: str
    column: str
    comparator: str
    threshold: Fraction

    def __post_init__(self):
        if not _PRED_NAME.match(self.predicate):
            raise IngestError(f"bad predicate name {self.predicate!r}")
        if self.comparator not in _COMPARATORS:
            raise IngestError(
                f"comparator must be one of {sorted(_COMPARATORS)}, got {self.comparator!r}"
            )

    def holds(self, value: Fraction) -> bool:
        return _COMPARATORS[self.comparator](value, self.threshold)


@dataclass(frozen=True)
class MetadataRule:
    """Project the named columns into a rigid fact over (-inf, inf)."""

    predicate: str
    columns: tuple[str, ...]

    def __post_init__(self):
        if not _PRED_NAME.match(self.predicate):
            raise IngestError(f"bad predicate name {self.predicate!r}")
        if not self.columns:
            raise IngestError(f"metadata rule {self.predicate} selects no columns")


@dataclass(frozen=True)
class IngestConfig:
    timestamp: str
    keys: tuple[str, ...]
    rules: tuple[ThresholdRule, ...] = ()
    metadata_rules: tuple[MetadataRule, ...] = ()
    convention: str = CARRY_FORWARD
    nulls: str = "skip"
    presorted: bool = False

    def __post_init__(self):
        if self.convention not in (CARRY_FORWARD, CARRY_BACK):
            raise IngestError(f"unknown interval convention {self.convention!r}")
        if self.nulls not in ("skip", "error"):
            raise IngestError(f"null policy must be skip or error, got {self.nulls!r}")
        seen: set[str] = set()
        for rule in self.rules + self.metadata_rules:
            if rule.predicate in seen:
                raise IngestError(f"predicate {rule.predicate} mapped twice")
            seen.add(rule.predicate)


def load_config(source: Union[str, Path, Mapping]) -> IngestConfig:
    """Read a config from a JSON file path or an already-decoded dict.

    Thresholds are best written as strings ("0.15") to stay exact;
    numeric literals are accepted and converted through their decimal
    rendering.
    """
    if isinstance(source, Mapping):
        raw = source
    else:
        raw = json.loads(Path(source).read_text())
    if not isinstance(raw, Mapping):
        raise IngestError("config must be a JSON object")

    def fraction(value) -> Fraction:
        try:
            return Fraction(str(value))
        except (ValueError, ZeroDivisionError):
            raise IngestError(f"bad threshold {value!r}") from None

    try:
        rules = tuple(
            ThresholdRule(
                predicate=r["predicate"],
                column=r["column"],
                comparator=r["comparator"],
                threshold=fraction(r["threshold"]),
            )
            for r in raw.get("rules", ())
        )
        metadata_rules = tuple(
            MetadataRule(predicate=r["predicate"], columns=tuple(r["columns"]))
            for r in raw.get("metadata_rules", ())
        )
    except KeyError as exc:
        raise IngestError(f"config rule missing field {exc}") from None
    return IngestConfig(
        timestamp=raw.get("timestamp", ""),
        keys=tuple(raw.get("keys", ())),
        rules=rules,
        metadata_rules=metadata_rules,
        convention=raw.get("convention", CARRY_FORWARD),
        nulls=raw.get("nulls", "skip"),
        presorted=bool(raw.get("presorted", False)),
    )


# ---------------------------------------------------------------------------
# Cell parsing
# ---------------------------------------------------------------------------

_DATETIME = re.compile(r"(\d{4})-(\d{2})-(\d{2})[ ;T](\d{1,2}):(\d{2})(?::(\d{2}))?\Z")
_CLOCK = re.compile(r"(\d{1,2}):(\d{2})(?::(\d{2}))?\Z")

# date arithmetic without timezone baggage: days since 1970-01-01 in the
# proleptic Gregorian calendar, times 86400
_EPOCH_ORDINAL = 719163


def _date_ordinal(y: int, m: int, d: int) -> int:
    return datetime.date(y, m, d).toordinal()


def parse_timestamp(text: str) -> TimePoint:
    """Accepts `YYYY-MM-DD HH:MM[:SS]` (also with `;` or `T`), bare
    clock `HH:MM[:SS]` as seconds since midnight, or decimal seconds.
    """
    text = text.strip()
    m = _DATETIME.match(text)
    if m:
        y, mo, d, h, mi, s = (int(g or 0) for g in m.groups())
        days = _date_ordinal(y, mo, d) - _EPOCH_ORDINAL
        return TimePoint.from_int(days * 86400 + h * 3600 + mi * 60 + s)
    m = _CLOCK.match(text)
    if m:
        h, mi, s = (int(g or 0) for g in m.groups())
        return TimePoint.from_int(h * 3600 + mi * 60 + s)
    return TimePoint.from_decimal(text)


def _is_null(cell: Optional[str]) -> bool:
    return cell is None or cell.strip() == "" or cell.strip().upper() == "NULL"


def _value(cell: str) -> Fraction:
    return Fraction(cell.strip())


# ---------------------------------------------------------------------------
# Threshold ingestion
# ---------------------------------------------------------------------------


def _open_rows(path: Union[str, Path]):
    handle = open(path, newline="")
    return handle, csv.DictReader(handle)


def _require_columns(fieldnames: Sequence[str], wanted: Iterable[str]) -> None:
    missing = sorted(set(wanted) - set(fieldnames))
    if missing:
        raise IngestError(f"CSV is missing mapped columns: {', '.join(missing)}")


def ingest_csv(path: Union[str, Path], config: IngestConfig) -> dict[str, TemporalTable]:
    """One TOA-sorted table per threshold rule, keyed by predicate.

    Rows are grouped by the partition key; consecutive timestamps pair
    into intervals per the convention, and the rule fires on the
    governing value: the lagged row for carry-forward, the arriving row
    for carry-back.
    """
    if not config.rules:
        raise IngestError("config has no threshold rules")
    if not config.timestamp:
        raise IngestError("config names no timestamp column")
    handle, reader = _open_rows(path)
    with handle:
        if reader.fieldnames is None:
            raise IngestError("CSV has no header row")
        _require_columns(
            reader.fieldnames,
            [config.timestamp, *config.keys, *(r.column for r in config.rules)],
        )
        partitions: dict[tuple[str, ...], list] = {}
        for row in reader:
            line = reader.line_num
            key = tuple(row[k] for k in config.keys)
            if any(v is None for v in key):
                raise IngestError(f"line {line}: short row")
            cell = row[config.timestamp]
            if _is_null(cell):
                raise IngestError(f"line {line}: missing timestamp")
            try:
                ts = parse_timestamp(cell)
            except ValueError as exc:
                raise IngestError(f"line {line}: {exc}") from None
            partitions.setdefault(key, []).append((ts, line, row))

    for key, rows in partitions.items():
        if config.presorted:
            for prev, cur in zip(rows, rows[1:]):
                if not prev[0] < cur[0]:
                    raise IngestError(
                        f"line {cur[1]}: timestamps not increasing for {key} "
                        "(file declared presorted)"
                    )
        else:
            rows.sort(key=lambda item: (item[0], item[1]))
            for prev, cur in zip(rows, rows[1:]):
                if prev[0] == cur[0]:
                    raise IngestError(
                        f"lines {prev[1]} and {cur[1]}: duplicate timestamp for {key}"
                    )

    forward = config.convention == CARRY_FORWARD
    out: dict[str, list[Row]] = {rule.predicate: [] for rule in config.rules}
    for key in sorted(partitions):
        rows = partitions[key]
        for (t0, line0, row0), (t1, line1, row1) in zip(rows, rows[1:]):
            if forward:
                iv = Interval(t0, True, t1, False)
                line, governing = line0, row0
            else:
                iv = Interval(t0, False, t1, True)
                line, governing = line1, row1
            for rule in config.rules:
                cell = governing.get(rule.column)
                if _is_null(cell):
                    if config.nulls == "error":
                        raise IngestError(f"line {line}: null {rule.column}")
                    continue
                try:
                    value = _value(cell)
                except (ValueError, ZeroDivisionError):
                    raise IngestError(
                        f"line {line}: bad number {cell!r} in {rule.column}"
                    ) from None
                if rule.holds(value):
                    out[rule.predicate].append((key, iv))

    return {
        pred: TemporalTable(config.keys, rows, presorted=True)
        for pred, rows in out.items()
    }


def ingest_metadata_csv(
    path: Union[str, Path], config: IngestConfig
) -> dict[str, TemporalTable]:
    """Rigid facts over (-inf, inf) from an atemporal table; duplicate
    projections collapse.  A file with no header yields empty tables.
    """
    if not config.metadata_rules:
        raise IngestError("config has no metadata rules")
    handle, reader = _open_rows(path)
    with handle:
        if reader.fieldnames is None:
            return {
                rule.predicate: TemporalTable(rule.columns, [])
                for rule in config.metadata_rules
            }
        _require_columns(
            reader.fieldnames,
            [c for rule in config.metadata_rules for c in rule.columns],
        )
        seen: dict[str, dict[tuple[str, ...], None]] = {
            rule.predicate: {} for rule in config.metadata_rules
        }
        for row in reader:
            line = reader.line_num
            for rule in config.metadata_rules:
                cells = [row.get(c) for c in rule.columns]
                if any(_is_null(c) for c in cells):
                    if config.nulls == "error":
                        raise IngestError(f"line {line}: null metadata cell")
                    continue
                seen[rule.predicate].setdefault(tuple(cells))
    return {
        rule.predicate: TemporalTable(
            rule.columns,
            [(tup, _FULL) for tup in sorted(seen[rule.predicate])],
            presorted=True,
        )
        for rule in config.metadata_rules
    }


# ---------------------------------------------------------------------------
# Bridging and replication
# ---------------------------------------------------------------------------


def as_data_instance(
    tables: Mapping[str, TemporalTable], clock_style: bool = False
) -> DataInstance:
    """Flatten ingested tables into ground facts, predicates in name
    order so equal inputs serialize identically."""
    facts = [
        Fact(Atom(pred, tuple(Term(c, False) for c in tup)), iv)
        for pred in sorted(tables)
        for tup, iv in tables[pred].rows
    ]
    return DataInstance(facts, clock_style)


def replicate(data: DataInstance, k: int, period: TimePoint) -> DataInstance:
    """Concatenate k copies of the data shifted by multiples of period.

    Facts over (-inf, inf) are rigid and replicate to themselves; a
    half-bounded fact cannot be shifted without overlapping its own
    copy, so more than one copy is an error.  The period must cover the
    span of the bounded facts.
    """
    if k < 1:
        raise IngestError(f"need at least one copy, got k={k}")
    if k == 1:
        return DataInstance(list(data.facts), data.clock_style)
    if not period.is_finite or not TimePoint.from_int(0) < period:
        raise IngestError("period must be a positive finite duration")
    lo_min: Optional[TimePoint] = None
    hi_max: Optional[TimePoint] = None
    for fact in data.facts:
        lo_fin = fact.interval.lo.is_finite
        hi_fin = fact.interval.hi.is_finite
        if lo_fin != hi_fin:
            raise IngestError(
                f"cannot replicate half-bounded fact {fact}: copies would overlap"
            )
        if lo_fin:
            if lo_min is None or fact.interval.lo < lo_min:
                lo_min = fact.interval.lo
            if hi_max is None or hi_max < fact.interval.hi:
                hi_max = fact.interval.hi
    if lo_min is not None:
        span = hi_max - lo_min
        if period < span:
            raise IngestError(
                f"period {period} is shorter than the data span {span}: copies overlap"
            )
    facts: list[Fact] = []
    for i in range(k):
        delta = TimePoint(period.num * i, period.exp)
        for fact in data.facts:
            iv = fact.interval
            shifted = Interval(
                iv.lo + delta, iv.lo_closed, iv.hi + delta, iv.hi_closed
            )
            facts.append(Fact(fact.atom, shifted))
    return DataInstance(facts, data.clock_style)
