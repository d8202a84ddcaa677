"""Two-level full factorial and face-centred central composite designs.

Row order is fixed so that generated files are reproducible:

* factorial block, lexicographic over the variable order with -1 before +1
  (the first variable changes slowest),
* ``center_replicates`` all-zero rows,
* axial face points, one pair per variable in variable order, -1 face first.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .design_space import DesignSpace

PROVENANCES = ("factorial", "center", "axial_face", "external")
DEFAULT_ROW_CAP = 2**24


class DesignError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    variable_labels: tuple[str, ...]
    rows: np.ndarray
    provenance: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.variable_labels)
        rows = np.array(self.rows, dtype=float).reshape(-1, len(labels))
        rows.setflags(write=False)
        prov = tuple(self.provenance)
        if len(prov) != rows.shape[0]:
            raise DesignError(f"{rows.shape[0]} rows but {len(prov)} provenance tags")
        bad = set(prov) - set(PROVENANCES)
        if bad:
            raise DesignError(f"unknown provenance tag(s) {sorted(bad)}")
        object.__setattr__(self, "variable_labels", labels)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "provenance", prov)

    def __len__(self) -> int:
        return self.rows.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DesignMatrix):
            return NotImplemented
        return (self.variable_labels == other.variable_labels and self.provenance == other.provenance
                and np.array_equal(self.rows, other.rows))

    __hash__ = None

    @property
    def n_vars(self) -> int:
        return len(self.variable_labels)

    def mask(self, provenance: str) -> np.ndarray:
        return np.array([p == provenance for p in self.provenance], dtype=bool)

    def subset(self, mask) -> "DesignMatrix":
        mask = np.asarray(mask)
        idx = np.flatnonzero(mask) if mask.dtype == bool else mask
        return DesignMatrix(self.variable_labels, self.rows[idx], tuple(self.provenance[i] for i in idx))

    def counts(self) -> dict[str, int]:
        return {p: self.provenance.count(p) for p in PROVENANCES if p in self.provenance}

    def check_tags(self) -> None:
        """Verify each row's values agree with its provenance tag."""
        for i, (row, tag) in enumerate(zip(self.rows, self.provenance)):
            nz = np.count_nonzero(row)
            if tag == "factorial" and not np.all(np.abs(row) == 1.0):
                raise DesignError(f"row {i}: factorial row with entries outside {{-1, +1}}")
            if tag == "center" and nz:
                raise DesignError(f"row {i}: center row is not all zero")
            if tag == "axial_face" and not (nz == 1 and np.max(np.abs(row)) == 1.0):
                raise DesignError(f"row {i}: axial row must have exactly one +/-1 entry")


def _labels(space_or_labels) -> tuple[str, ...]:
    if isinstance(space_or_labels, DesignSpace):
        return space_or_labels.labels
    if isinstance(space_or_labels, int):
        return tuple(f"x{i + 1}" for i in range(space_or_labels))
    return tuple(space_or_labels)


def _factorial_rows(n: int, row_cap: int) -> np.ndarray:
    if n < 1:
        raise DesignError("need at least one variable")
    if 2**n > row_cap:
        raise DesignError(f"2^{n} = {2**n} rows exceeds the row cap {row_cap}")
    return np.array(list(itertools.product((-1.0, 1.0), repeat=n)))


def full_factorial(space: DesignSpace | Sequence[str] | int, row_cap: int = DEFAULT_ROW_CAP) -> DesignMatrix:
    """All 2^n corners of the codified cube.

    ``space`` may also be a label sequence or a plain variable count.
    """
    labels = _labels(space)
    rows = _factorial_rows(len(labels), row_cap)
    return DesignMatrix(labels, rows, ("factorial",) * len(rows))


def ccf(space: DesignSpace | Sequence[str] | int, center_replicates: int = 1,
        row_cap: int = DEFAULT_ROW_CAP) -> DesignMatrix:
    """Central composite design with axial points on the cube faces (alpha = 1)."""
    if center_replicates < 1:
        raise DesignError("center_replicates must be >= 1")
    labels = _labels(space)
    n = len(labels)
    fact = _factorial_rows(n, row_cap)
    center = np.zeros((center_replicates, n))
    axial = np.zeros((2 * n, n))
    for i in range(n):
        axial[2 * i, i] = -1.0
        axial[2 * i + 1, i] = 1.0
    rows = np.vstack([fact, center, axial])
    prov = ("factorial",) * len(fact) + ("center",) * center_replicates + ("axial_face",) * (2 * n)
    return DesignMatrix(labels, rows, prov)


def deduplicate(matrix: DesignMatrix) -> DesignMatrix:
    """Drop repeated rows, keeping the first occurrence."""
    seen: set[bytes] = set()
    keep = []
    for i, row in enumerate(matrix.rows):
        # +0.0 normalises -0.0 so both hash alike
        key = (row + 0.0).tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return matrix.subset(np.array(keep, dtype=int))


def write_design_csv(matrix: DesignMatrix, path: str | Path, provenance: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(matrix.variable_labels) + (["provenance"] if provenance else []))
        for row, tag in zip(matrix.rows, matrix.provenance):
            w.writerow([format_number(v) for v in row] + ([tag] if provenance else []))


def read_design_csv(path: str | Path) -> DesignMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DesignError(f"{path}: empty design file") from None
        has_prov = header[-1] == "provenance"
        labels = header[:-1] if has_prov else header
        if not labels:
            raise DesignError(f"{path}: no variable columns")
        rows, prov = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DesignError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            try:
                rows.append([float(v) for v in rec[: len(labels)]])
            except ValueError as exc:
                raise DesignError(f"{path}:{lineno}: {exc}") from None
            prov.append(rec[-1] if has_prov else "external")
    return DesignMatrix(tuple(labels), np.array(rows).reshape(-1, len(labels)), tuple(prov))


def format_number(v: float) -> str:
    v = float(v) + 0.0
    return repr(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
