"""Loading, validating and slicing binary response matrices."""

from __future__ import annotations

import csv
import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

META_COLUMNS = ("student_id", "grade", "gender")
MISSING_POLICIES = ("reject", "score_as_incorrect")


class DataError(ValueError):
    """Malformed or invalid response data."""


class EmptySubsetWarning(UserWarning):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    excluded_items: frozenset[str] = frozenset()
    grouping_variable: str = "grade"
    missing_policy: str = "reject"
    random_seed: int = 20221
    # metadata columns placed between `gender` and the first item column
    extra_columns: tuple[str, ...] = ()
    # DIF comparisons between pooled group levels, e.g. (("3", "4"), ("5", "6"))
    dif_pairs: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...] = ()
    dif_methods: tuple[str, ...] = ("mh", "logistic", "lord")
    dif_alpha: float = 0.05
    proficiency_origin: float = 0.0

    def __post_init__(self):
        if self.missing_policy not in MISSING_POLICIES:
            raise ValueError(f"missing_policy must be one of {MISSING_POLICIES}, got {self.missing_policy!r}")
        object.__setattr__(self, "excluded_items", frozenset(self.excluded_items))

    @classmethod
    def from_file(cls, path: str | Path) -> "AnalysisConfig":
        """Parse a plain ``key=value`` file; ``#`` starts a comment."""
        values: dict[str, str] = {}
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = value
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "AnalysisConfig":
        kwargs: dict = {}
        for key, value in values.items():
            if key == "excluded_items":
                kwargs[key] = frozenset(_split(value))
            elif key in ("grouping_variable", "missing_policy"):
                kwargs[key] = value
            elif key == "random_seed":
                kwargs[key] = int(value)
            elif key == "extra_columns":
                kwargs[key] = tuple(_split(value))
            elif key == "dif_methods":
                kwargs[key] = tuple(_split(value))
            elif key == "dif_alpha":
                kwargs[key] = float(value)
            elif key == "proficiency_origin":
                kwargs[key] = float(value)
            elif key == "dif_pairs":
                # "3,4|5,6; 3|4" -> ((("3","4"),("5","6")), (("3",),("4",)))
                pairs = []
                for chunk in value.split(";"):
                    if not chunk.strip():
                        continue
                    left, sep, right = chunk.partition("|")
                    if not sep:
                        raise ValueError(f"dif_pairs entry {chunk!r} needs a '|' separator")
                    pairs.append((tuple(_split(left)), tuple(_split(right))))
                kwargs[key] = tuple(pairs)
            else:
                raise ValueError(f"unknown configuration key {key!r}")
        return cls(**kwargs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["excluded_items"] = sorted(self.excluded_items)
        d["extra_columns"] = list(self.extra_columns)
        d["dif_methods"] = list(self.dif_methods)
        d["dif_pairs"] = [[list(a), list(b)] for a, b in self.dif_pairs]
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


@dataclass(frozen=True)
class StudentRecord:
    student_id: str
    grade: int
    gender: str
    responses: tuple[int, ...]
    extra: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    """Immutable students x items table of 0/1 responses with group metadata.

    ``responses`` is an ``(n_students, n_items)`` int8 array; metadata columns are
    aligned arrays. ``n_raw_rows`` is the number of data rows in the source file
    before any filtering.
    """

    items: tuple[str, ...]
    student_ids: np.ndarray
    grades: np.ndarray
    genders: np.ndarray
    responses: np.ndarray
    extra: Mapping[str, np.ndarray] = field(default_factory=dict)
    categories: Mapping[str, tuple] = field(default_factory=dict)
    n_raw_rows: int | None = None

    def __post_init__(self):
        if len(set(self.items)) != len(self.items):
            raise DataError("item identifiers must be unique")
        r = np.asarray(self.responses)
        if r.ndim != 2 or r.shape[1] != len(self.items):
            raise DataError(f"responses shape {r.shape} does not match {len(self.items)} items")
        if r.size and not np.isin(r, (0, 1)).all():
            raise DataError("responses must be 0/1")
        n = r.shape[0]
        for name in ("student_ids", "grades", "genders"):
            if len(getattr(self, name)) != n:
                raise DataError(f"{name} has wrong length")
        r = r.astype(np.int8)
        r.setflags(write=False)
        object.__setattr__(self, "responses", r)
        for name in ("student_ids", "grades", "genders"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.categories:
            cats = {
                "grade": tuple(sorted(set(int(g) for g in self.grades))),
                "gender": tuple(sorted(set(str(g) for g in self.genders))),
            }
            for k, v in self.extra.items():
                cats[k] = tuple(sorted(set(map(str, v))))
            object.__setattr__(self, "categories", cats)
        if self.n_raw_rows is None:
            object.__setattr__(self, "n_raw_rows", n)

    @property
    def n_students(self) -> int:
        return self.responses.shape[0]

    @property
    def n_items(self) -> int:
        return self.responses.shape[1]

    @property
    def rows(self) -> list[StudentRecord]:
        return [
            StudentRecord(
                str(self.student_ids[i]),
                int(self.grades[i]),
                str(self.genders[i]),
                tuple(int(x) for x in self.responses[i]),
                {k: str(v[i]) for k, v in self.extra.items()},
            )
            for i in range(self.n_students)
        ]

    def totals(self) -> np.ndarray:
        return self.responses.sum(axis=1).astype(int)

    def column(self, name: str) -> np.ndarray:
        """Grouping column as an array of strings."""
        if name == "grade":
            return np.array([str(int(g)) for g in self.grades])
        if name == "gender":
            return self.genders.astype(str)
        if name in self.extra:
            return np.asarray(self.extra[name]).astype(str)
        raise KeyError(f"unknown grouping column {name!r}; available: {self.grouping_columns}")

    @property
    def grouping_columns(self) -> tuple[str, ...]:
        return ("grade", "gender") + tuple(self.extra)

    def drop_items(self, items: Iterable[str]) -> "ResponseMatrix":
        items = set(items)
        unknown = items - set(self.items)
        if unknown:
            raise DataError(f"excluded items not in data: {sorted(unknown)}")
        keep = [j for j, it in enumerate(self.items) if it not in items]
        return replace(
            self,
            items=tuple(self.items[j] for j in keep),
            responses=self.responses[:, keep],
        )

    def take(self, mask: np.ndarray) -> "ResponseMatrix":
        mask = np.asarray(mask)
        return replace(
            self,
            student_ids=self.student_ids[mask],
            grades=self.grades[mask],
            genders=self.genders[mask],
            responses=self.responses[mask],
            extra={k: np.asarray(v)[mask] for k, v in self.extra.items()},
        )

    def __eq__(self, other):
        if not isinstance(other, ResponseMatrix):
            return NotImplemented
        return (
            self.items == other.items
            and np.array_equal(self.student_ids, other.student_ids)
            and np.array_equal(self.grades, other.grades)
            and np.array_equal(self.genders.astype(str), other.genders.astype(str))
            and np.array_equal(self.responses, other.responses)
            and set(self.extra) == set(other.extra)
            and all(np.array_equal(np.asarray(self.extra[k]).astype(str), np.asarray(other.extra[k]).astype(str)) for k in self.extra)
        )

    __hash__ = None


def load_csv(path: str | Path, config: AnalysisConfig | None = None) -> ResponseMatrix:
    """Read a response CSV (``student_id,grade,gender,[extra...],Q1,...``)."""
    config = config or AnalysisConfig()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        n_meta = len(META_COLUMNS) + len(config.extra_columns)
        expected = list(META_COLUMNS) + list(config.extra_columns)
        if header[:n_meta] != expected:
            raise DataError(f"{path}: malformed header, expected it to start with {','.join(expected)}, got {','.join(header[:n_meta])}")
        items = header[n_meta:]
        if len(items) < 2:
            raise DataError(f"{path}: malformed header, need at least 2 item columns")
        if len(set(items)) != len(items) or any(not it for it in items):
            raise DataError(f"{path}: malformed header, item identifiers must be unique and non-empty")

        ids, grades, genders, extra, resp = [], [], [], {c: [] for c in config.extra_columns}, []
        seen: dict[str, int] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {lineno} has {len(row)} fields, header has {len(header)}")
            sid = row[0].strip()
            if sid in seen:
                raise DataError(f"{path}: duplicate student_id {sid!r} (rows {seen[sid]} and {lineno})")
            seen[sid] = lineno
            try:
                grade = int(row[1])
            except ValueError:
                raise DataError(f"{path}: row {lineno}, column grade: not an integer: {row[1]!r}") from None
            cells = []
            for item, cell in zip(items, row[n_meta:]):
                cell = cell.strip()
                if cell in ("0", "1"):
                    cells.append(int(cell))
                elif cell == "" and config.missing_policy == "score_as_incorrect":
                    cells.append(0)
                elif cell == "":
                    raise DataError(f"{path}: row {lineno}, column {item}: missing response (missing_policy=reject)")
                else:
                    raise DataError(f"{path}: row {lineno}, column {item}: non-binary value {cell!r}")
            ids.append(sid)
            grades.append(grade)
            genders.append(row[2].strip())
            for k, c in enumerate(config.extra_columns):
                extra[c].append(row[3 + k].strip())
            resp.append(cells)

    if not resp:
        raise DataError(f"{path}: empty file (no data rows)")
    matrix = ResponseMatrix(
        items=tuple(items),
        student_ids=np.array(ids),
        grades=np.array(grades, dtype=int),
        genders=np.array(genders),
        responses=np.array(resp, dtype=np.int8),
        extra={k: np.array(v) for k, v in extra.items()},
        n_raw_rows=len(resp),
    )
    if config.excluded_items:
        matrix = matrix.drop_items(config.excluded_items)
    return matrix


def save_csv(matrix: ResponseMatrix, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(META_COLUMNS) + list(matrix.extra) + list(matrix.items))
        for i in range(matrix.n_students):
            w.writerow(
                [matrix.student_ids[i], int(matrix.grades[i]), matrix.genders[i]]
                + [matrix.extra[k][i] for k in matrix.extra]
                + [int(x) for x in matrix.responses[i]]
            )


Selector = Mapping[str, object] | Callable[[StudentRecord], bool]


def subset(matrix: ResponseMatrix, predicate: Selector | None = None, **where) -> ResponseMatrix:
    """Row-filter ``matrix``.

    ``predicate`` maps a grouping column to an allowed value or collection of
    values, e.g. ``{"grade": 3, "gender": "girls"}``; keyword arguments are merged
    into it. A callable receiving a :class:`StudentRecord` is also accepted.
    An empty result is returned with an :class:`EmptySubsetWarning`.
    """
    if callable(predicate):
        mask = np.array([bool(predicate(r)) for r in matrix.rows], dtype=bool)
    else:
        criteria = dict(predicate or {})
        criteria.update(where)
        mask = np.ones(matrix.n_students, dtype=bool)
        for column, allowed in criteria.items():
            if column not in matrix.grouping_columns:
                raise KeyError(f"unknown grouping column {column!r}; available: {matrix.grouping_columns}")
            if isinstance(allowed, (str, int, np.integer)):
                allowed = [allowed]
            allowed = {str(v) for v in allowed}
            mask &= np.isin(matrix.column(column), list(allowed))
    out = matrix.take(mask)
    if out.n_students == 0:
        warnings.warn("subset selected no students", EmptySubsetWarning, stacklevel=2)
    return out


def group_levels(matrix: ResponseMatrix, column: str) -> list[str]:
    """Observed levels of a grouping column; numeric labels sort numerically."""
    levels = set(matrix.column(column).tolist())
    try:
        return sorted(levels, key=lambda s: (0, float(s)))
    except ValueError:
        return sorted(levels)
