"""Columnar in-memory relations, CSV ingestion, and catalog metadata.

A :class:`Relation` stores one numpy array per column: ``int64`` for integer
columns (with an optional null mask), ``float64`` for float columns (NaN is
null), and dense ``int32`` dictionary codes for string columns.  Relations
are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CsvError, StorageError

INTEGER = "integer"
FLOAT = "float"
STRING = "string"
KINDS = (INTEGER, FLOAT, STRING)


@dataclass(frozen=True)
class ForeignKey:
    local: str
    table: str
    column: str


@dataclass(frozen=True)
class FunctionalDependency:
    determinant: str
    dependent: str


@dataclass(frozen=True)
class Schema:
    """Ordered column declarations plus key metadata.

    ``columns`` is a tuple of ``(name, kind)`` pairs with kind one of
    ``integer``, ``float``, ``string``.  Column names are unique
    case-insensitively; lookups resolve to the declared casing.
    """

    columns: tuple[tuple[str, str], ...]
    keys: tuple[str, ...] = ()
    fks: tuple[ForeignKey, ...] = ()
    fds: tuple[FunctionalDependency, ...] = ()

    def __post_init__(self):
        seen = set()
        for name, kind in self.columns:
            if kind not in KINDS:
                raise StorageError(f"unknown column kind {kind!r} for {name!r}")
            low = name.lower()
            if low in seen:
                raise StorageError(f"duplicate column name {name!r}")
            seen.add(low)
        for k in self.keys:
            self.resolve(k)
        for fd in self.fds:
            self.resolve(fd.determinant)
            self.resolve(fd.dependent)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.columns)

    def kind_of(self, name: str) -> str:
        resolved = self.resolve(name)
        for cname, kind in self.columns:
            if cname == resolved:
                return kind
        raise StorageError(f"unknown column {name!r}")

    def has(self, name: str) -> bool:
        low = name.lower()
        return any(cname.lower() == low for cname, _ in self.columns)

    def resolve(self, name: str) -> str:
        """Case-insensitive lookup returning the declared column name."""
        low = name.lower()
        for cname, _ in self.columns:
            if cname.lower() == low:
                return cname
        raise StorageError(f"unknown column {name!r}")


class Relation:
    """Immutable columnar table."""

    def __init__(self, schema: Schema, columns: dict, dictionaries: dict | None = None,
                 null_masks: dict | None = None, name: str = ""):
        self.schema = schema
        self.name = name
        self.columns = {}
        self.dictionaries = {}
        self.null_masks = {}
        lengths = set()
        for cname, kind in schema.columns:
            if cname not in columns:
                raise StorageError(f"missing column array for {cname!r}")
            arr = np.asarray(columns[cname])
            if kind == INTEGER:
                arr = arr.astype(np.int64, copy=False)
            elif kind == FLOAT:
                arr = arr.astype(np.float64, copy=False)
            else:
                arr = arr.astype(np.int32, copy=False)
                dictionary = tuple((dictionaries or {}).get(cname, ()))
                if arr.size and (arr.min() < 0 or arr.max() >= len(dictionary)):
                    raise StorageError(f"dictionary codes out of range for column {cname!r}")
                self.dictionaries[cname] = dictionary
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            self.columns[cname] = arr
            lengths.add(arr.shape[0])
            mask = (null_masks or {}).get(cname)
            if mask is not None:
                if kind == STRING:
                    raise StorageError(f"nulls are not permitted in string column {cname!r}")
                mask = np.asarray(mask, dtype=bool)
                mask.setflags(write=False)
            self.null_masks[cname] = mask
        if len(lengths) > 1:
            raise StorageError(f"ragged column lengths: {sorted(lengths)}")
        self.row_count = lengths.pop() if lengths else 0

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.schema.resolve(name)]

    def null_mask(self, name: str) -> np.ndarray:
        """Boolean mask of null cells (always materialized)."""
        cname = self.schema.resolve(name)
        mask = self.null_masks.get(cname)
        if mask is not None:
            return mask
        if self.schema.kind_of(cname) == FLOAT:
            return np.isnan(self.columns[cname])
        return np.zeros(self.row_count, dtype=bool)

    def dictionary(self, name: str) -> tuple[str, ...]:
        return self.dictionaries[self.schema.resolve(name)]

    def decode(self, name: str, codes=None):
        """Decode a string column (or given codes) to a list of values."""
        cname = self.schema.resolve(name)
        d = self.dictionaries[cname]
        if codes is None:
            codes = self.columns[cname]
        return [d[c] for c in np.asarray(codes)]

    def value_at(self, name: str, row: int):
        cname = self.schema.resolve(name)
        kind = self.schema.kind_of(cname)
        if self.null_mask(cname)[row]:
            return None
        raw = self.columns[cname][row]
        if kind == STRING:
            return self.dictionaries[cname][int(raw)]
        if kind == INTEGER:
            return int(raw)
        return float(raw)

    def take(self, row_index: np.ndarray, name: str = "") -> "Relation":
        """New relation holding the selected rows (dictionaries shared)."""
        cols = {c: self.columns[c][row_index] for c in self.columns}
        masks = {c: (m[row_index] if m is not None else None)
                 for c, m in self.null_masks.items()}
        return Relation(self.schema, cols, self.dictionaries, masks, name or self.name)

    def __repr__(self):
        return f"Relation({self.name or '?'}: {self.row_count} rows, {len(self.columns)} cols)"


@dataclass(frozen=True)
class ColumnStats:
    distinct_count: int
    null_count: int
    min: float | int | None = None
    max: float | int | None = None


def compute_stats(rel: Relation, column: str) -> ColumnStats:
    """Exact per-column statistics (distinct/null counts, numeric min/max)."""
    cname = rel.schema.resolve(column)
    kind = rel.schema.kind_of(cname)
    arr = rel.columns[cname]
    nulls = rel.null_mask(cname)
    null_count = int(nulls.sum())
    valid = arr[~nulls]
    if valid.size == 0:
        return ColumnStats(distinct_count=0, null_count=null_count)
    distinct = int(np.unique(valid).size)
    if kind == STRING:
        return ColumnStats(distinct_count=distinct, null_count=null_count)
    lo, hi = valid.min(), valid.max()
    if kind == INTEGER:
        return ColumnStats(distinct, null_count, int(lo), int(hi))
    return ColumnStats(distinct, null_count, float(lo), float(hi))


# ---------------------------------------------------------------------------
# CSV ingestion


def _parse_cell(text: str, kind: str, row: int, column: str):
    if text == "":
        return None
    if kind == INTEGER:
        try:
            return int(text)
        except ValueError:
            raise CsvError(f"cannot parse {text!r} as integer", row, column) from None
    if kind == FLOAT:
        try:
            return float(text)
        except ValueError:
            raise CsvError(f"cannot parse {text!r} as float", row, column) from None
    return text


def load_csv(path, schema: Schema, delimiter: str = ",", header: bool = True,
             name: str = "") -> Relation:
    """Load an RFC-4180-style CSV file into a dictionary-encoded Relation.

    The header row (when present) must list exactly the schema's columns.
    Empty cells become nulls; nulls in string columns are rejected.
    """
    path = Path(path)
    if not path.exists():
        raise StorageError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        return _load_csv_stream(f, schema, delimiter, header, name or path.stem)


def loads_csv(text: str, schema: Schema, delimiter: str = ",", header: bool = True,
              name: str = "") -> Relation:
    return _load_csv_stream(io.StringIO(text), schema, delimiter, header, name)


def _load_csv_stream(stream, schema, delimiter, header, name):
    reader = csv.reader(stream, delimiter=delimiter)
    names = schema.names
    ncols = len(names)
    if header:
        try:
            head = next(reader)
        except StopIteration:
            raise CsvError("missing header row") from None
        if len(head) != ncols or any(h.strip().lower() != n.lower()
                                     for h, n in zip(head, names)):
            raise CsvError(f"header {head!r} does not match schema columns {list(names)}")

    kinds = [schema.kind_of(n) for n in names]
    raw_cols: list[list] = [[] for _ in names]
    for rownum, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != ncols:
            raise CsvError(f"expected {ncols} cells, found {len(row)}", rownum, "")
        for i, cell in enumerate(row):
            raw_cols[i].append(_parse_cell(cell, kinds[i], rownum, names[i]))

    nrows = len(raw_cols[0]) if raw_cols else 0
    columns, dictionaries, masks = {}, {}, {}
    for i, cname in enumerate(names):
        kind = kinds[i]
        values = raw_cols[i]
        if kind == STRING:
            codes, dictionary = _encode_strings(values, cname)
            columns[cname] = codes
            dictionaries[cname] = dictionary
        elif kind == FLOAT:
            columns[cname] = np.array([math.nan if v is None else v for v in values],
                                      dtype=np.float64)
        else:
            mask = np.array([v is None for v in values], dtype=bool)
            columns[cname] = np.array([0 if v is None else v for v in values],
                                      dtype=np.int64)
            masks[cname] = mask if mask.any() else None
    if not names:
        raise StorageError("schema has no columns")
    rel = Relation(schema, columns, dictionaries, masks, name)
    assert rel.row_count == nrows
    return rel


def _encode_strings(values, cname):
    mapping: dict[str, int] = {}
    codes = np.empty(len(values), dtype=np.int32)
    for i, v in enumerate(values):
        if v is None:
            raise CsvError("null is not permitted in string column", i + 1, cname)
        code = mapping.get(v)
        if code is None:
            code = len(mapping)
            mapping[v] = code
        codes[i] = code
    return codes, tuple(mapping)


def write_csv(rel: Relation, path, delimiter: str = ",") -> None:
    """Write a relation back to CSV; load_csv(write_csv(r)) round-trips."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, delimiter=delimiter)
        names = rel.schema.names
        w.writerow(names)
        cells = []
        for cname in names:
            kind = rel.schema.kind_of(cname)
            arr = rel.columns[cname]
            nulls = rel.null_mask(cname)
            if kind == STRING:
                d = rel.dictionaries[cname]
                cells.append([d[c] for c in arr])
            elif kind == FLOAT:
                cells.append(["" if nulls[i] else repr(float(arr[i]))
                              for i in range(rel.row_count)])
            else:
                cells.append(["" if nulls[i] else str(int(arr[i]))
                              for i in range(rel.row_count)])
        for row in zip(*cells) if cells else []:
            w.writerow(row)


# ---------------------------------------------------------------------------
# Schema files and catalog

def parse_schema_file(text: str) -> Schema:
    """Parse the line-oriented schema format.

    Directives: ``column <name> <kind>``, ``pk <a>[,<b>...]``,
    ``fk <local> -> <table>.<column>``, ``fd <det> -> <dep>``.
    """
    columns, keys, fks, fds = [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        directive = parts[0].lower()
        try:
            if directive == "column":
                _, cname, kind = parts
                columns.append((cname, kind.lower()))
            elif directive == "pk":
                keys.extend(p.strip() for p in " ".join(parts[1:]).split(","))
            elif directive == "fk":
                local, arrow, target = parts[1], parts[2], parts[3]
                if arrow != "->" or "." not in target:
                    raise ValueError
                table, col = target.split(".", 1)
                fks.append(ForeignKey(local, table, col))
            elif directive == "fd":
                det, arrow, dep = parts[1], parts[2], parts[3]
                if arrow != "->":
                    raise ValueError
                fds.append(FunctionalDependency(det, dep))
            else:
                raise ValueError
        except (ValueError, IndexError):
            raise StorageError(f"bad schema directive on line {lineno}: {raw!r}") from None
    return Schema(tuple(columns), tuple(keys), tuple(fks), tuple(fds))


@dataclass
class Catalog:
    """Named relations with their schemas, loaded from a directory of
    ``<table>.schema`` + ``<table>.csv`` pairs."""

    tables: dict[str, Relation] = field(default_factory=dict)

    @classmethod
    def load(cls, directory, delimiter: str = ",") -> "Catalog":
        directory = Path(directory)
        if not directory.is_dir():
            raise StorageError(f"catalog directory not found: {directory}")
        cat = cls()
        for schema_path in sorted(directory.glob("*.schema")):
            table = schema_path.stem
            csv_path = directory / f"{table}.csv"
            if not csv_path.exists():
                raise StorageError(f"schema {schema_path.name} has no CSV file")
            schema = parse_schema_file(schema_path.read_text(encoding="utf-8"))
            cat.tables[table] = load_csv(csv_path, schema, delimiter=delimiter, name=table)
        cat.validate()
        return cat

    def add(self, rel: Relation) -> None:
        if not rel.name:
            raise StorageError("relation must be named to join a catalog")
        self.tables[rel.name] = rel

    def validate(self) -> None:
        for tname, rel in self.tables.items():
            for fk in rel.schema.fks:
                rel.schema.resolve(fk.local)
                target = self.tables.get(fk.table)
                if target is None:
                    raise StorageError(
                        f"table {tname!r}: fk target table {fk.table!r} not in catalog")
                target.schema.resolve(fk.column)

    def get(self, name: str) -> Relation:
        for tname, rel in self.tables.items():
            if tname.lower() == name.lower():
                return rel
        raise StorageError(f"unknown table {name!r}")

    def has(self, name: str) -> bool:
        return any(t.lower() == name.lower() for t in self.tables)

    def fk_between(self, fact: str, dim: str) -> ForeignKey | None:
        """The declared FK from fact to dim, if any."""
        rel = self.get(fact)
        for fk in rel.schema.fks:
            if fk.table.lower() == dim.lower():
                return fk
        return None

    def fd_dependents(self, table: str, determinant: str) -> set[str]:
        rel = self.get(table)
        det = rel.schema.resolve(determinant)
        return {fd.dependent for fd in rel.schema.fds
                if rel.schema.resolve(fd.determinant) == det}
