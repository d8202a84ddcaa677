"""Sparse polynomial response surfaces in codified variables.

A model is an intercept plus monomial terms such as ``b * x2``,
``c * x1 * x13``, ``c * x2**2`` or ``d * x9 * x13 * x15``. Models can be
evaluated, differentiated analytically, added together, fitted by least
squares on a :class:`ResponseDataset` and serialised to JSON.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import linalg, stats

from .doe import DesignMatrix, format_number

RESPONSE_UNITS = {
    "sigma_F_MPa": "MPa",
    "sigma_R_MPa": "MPa",
    "uz_mm": "mm",
    "mass_kg": "kg",
}
UNITS = ("MPa", "mm", "kg")
# the published regional-aircraft tables contain 4-factor terms (e_1234, e_5678)
MAX_DEGREE = 4


class SurrogateError(ValueError):
    pass


class RankDeficientError(SurrogateError):
    def __init__(self, message: str, terms: Sequence["Term"] = ()):
        super().__init__(message)
        self.terms = tuple(terms)


Factors = tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class Term:
    factors: Factors
    coefficient: float = 0.0

    def __post_init__(self):
        factors = tuple((str(lab), int(e)) for lab, e in self.factors)
        if not factors:
            raise SurrogateError("a term needs at least one factor (the intercept is separate)")
        labels = [lab for lab, _ in factors]
        if len(set(labels)) != len(labels):
            raise SurrogateError(f"repeated label in term {factors}")
        exps = [e for _, e in factors]
        if any(e not in (1, 2) for e in exps):
            raise SurrogateError(f"exponents must be 1 or 2: {factors}")
        if 2 in exps and len(factors) != 1:
            raise SurrogateError(f"a squared factor must stand alone: {factors}")
        if sum(exps) > MAX_DEGREE:
            raise SurrogateError(f"term degree {sum(exps)} exceeds {MAX_DEGREE}: {factors}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.factors)

    @property
    def key(self) -> frozenset:
        return frozenset(self.factors)

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.factors)

    @property
    def is_pure_quadratic(self) -> bool:
        return len(self.factors) == 1 and self.factors[0][1] == 2

    def describe(self) -> str:
        return "*".join(lab if e == 1 else f"{lab}^{e}" for lab, e in self.factors)


def term(*labels: str, coefficient: float = 0.0) -> Term:
    """Shorthand: ``term("x1", "x2")`` for an interaction, ``term("x2", "x2")`` for x2**2."""
    if len(labels) == 2 and labels[0] == labels[1]:
        return Term(((labels[0], 2),), coefficient)
    return Term(tuple((lab, 1) for lab in labels), coefficient)


@dataclass(frozen=True)
class PolynomialSurrogate:
    response_name: str
    unit: str
    variable_labels: tuple[str, ...]
    intercept: float
    terms: tuple[Term, ...] = ()
    residual_std: float | None = None
    mean_residual: float | None = None
    metadata: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variable_labels", tuple(self.variable_labels))
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "intercept", float(self.intercept))
        if self.unit not in UNITS:
            raise SurrogateError(f"unknown unit {self.unit!r}")
        known = set(self.variable_labels)
        seen = set()
        for t in self.terms:
            missing = set(t.labels) - known
            if missing:
                raise SurrogateError(f"term {t.describe()} uses unknown label(s) {sorted(missing)}")
            if t.key in seen:
                raise SurrogateError(f"duplicate term {t.describe()}")
            seen.add(t.key)

    @property
    def n_vars(self) -> int:
        return len(self.variable_labels)

    @property
    def n_terms(self) -> int:
        """Number of coefficients including the intercept."""
        return len(self.terms) + 1

    @cached_property
    def _compiled(self):
        pos = {lab: i for i, lab in enumerate(self.variable_labels)}
        return [
            (t.coefficient, tuple((pos[lab], e) for lab, e in t.factors)) for t in self.terms
        ]

    def _as_points(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x2 = np.atleast_2d(x)
        if x2.ndim != 2 or x2.shape[1] != self.n_vars:
            raise SurrogateError(
                f"{self.response_name}: expected points with {self.n_vars} coordinates, got shape {x.shape}"
            )
        return x2, single

    def evaluate(self, x):
        """Model value at one point (1-D input) or at each row of a 2-D array."""
        pts, single = self._as_points(x)
        out = np.full(pts.shape[0], self.intercept)
        for coef, factors in self._compiled:
            mono = np.ones(pts.shape[0])
            for j, e in factors:
                mono = mono * (pts[:, j] if e == 1 else pts[:, j] ** e)
            out += coef * mono
        return float(out[0]) if single else out

    __call__ = evaluate

    def gradient(self, x):
        pts, single = self._as_points(x)
        grad = np.zeros_like(pts)
        for coef, factors in self._compiled:
            for k, (j, e) in enumerate(factors):
                part = coef * e * (pts[:, j] if e == 2 else 1.0)
                for kk, (jj, ee) in enumerate(factors):
                    if kk != k:
                        part = part * pts[:, jj] ** ee
                grad[:, j] += part
        return grad[0] if single else grad

    def basis_matrix(self, x) -> np.ndarray:
        """Columns [1, monomial_1, ...] evaluated at the given points."""
        return basis_matrix(self.terms, self.variable_labels, x)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.intercept] + [t.coefficient for t in self.terms])

    def coefficient(self, *labels: str) -> float:
        key = term(*labels).key
        for t in self.terms:
            if t.key == key:
                return t.coefficient
        return 0.0

    def with_coefficients(self, coefficients: Sequence[float], **changes) -> "PolynomialSurrogate":
        c = list(coefficients)
        if len(c) != self.n_terms:
            raise SurrogateError(f"expected {self.n_terms} coefficients, got {len(c)}")
        terms = tuple(Term(t.factors, ci) for t, ci in zip(self.terms, c[1:]))
        kw = dict(
            response_name=self.response_name, unit=self.unit, variable_labels=self.variable_labels,
            intercept=c[0], terms=terms, residual_std=None, mean_residual=None, metadata=dict(self.metadata),
        )
        kw.update(changes)
        return PolynomialSurrogate(**kw)

    def __add__(self, other: "PolynomialSurrogate") -> "PolynomialSurrogate":
        if self.variable_labels != other.variable_labels or self.unit != other.unit:
            raise SurrogateError("can only add models with identical labels and units")
        merged: dict[frozenset, Term] = {t.key: t for t in self.terms}
        for t in other.terms:
            if t.key in merged:
                merged[t.key] = Term(t.factors, merged[t.key].coefficient + t.coefficient)
            else:
                merged[t.key] = t
        return PolynomialSurrogate(
            self.response_name, self.unit, self.variable_labels,
            self.intercept + other.intercept, tuple(merged.values()),
        )

    def to_dict(self) -> dict:
        d = {
            "response_name": self.response_name,
            "unit": self.unit,
            "labels": list(self.variable_labels),
            "intercept": self.intercept,
            "terms": [
                {"factors": [[lab, e] for lab, e in t.factors], "coefficient": t.coefficient}
                for t in self.terms
            ],
        }
        if self.residual_std is not None:
            d["residual_std"] = self.residual_std
        if self.mean_residual is not None:
            d["mean_residual"] = self.mean_residual
        if self.metadata:
            d["metadata"] = dict(self.metadata)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "PolynomialSurrogate":
        try:
            terms = tuple(
                Term(tuple((lab, e) for lab, e in t["factors"]), t["coefficient"]) for t in d["terms"]
            )
            return cls(
                response_name=d["response_name"],
                unit=d["unit"],
                variable_labels=tuple(d["labels"]),
                intercept=d["intercept"],
                terms=terms,
                residual_std=d.get("residual_std"),
                mean_residual=d.get("mean_residual"),
                metadata=d.get("metadata", {}),
            )
        except KeyError as exc:
            raise SurrogateError(f"model file missing field {exc}") from None


def basis_matrix(terms: Sequence[Term], labels: Sequence[str], x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    pos = {lab: i for i, lab in enumerate(labels)}
    cols = [np.ones(x.shape[0])]
    for t in terms:
        col = np.ones(x.shape[0])
        for lab, e in t.factors:
            col = col * x[:, pos[lab]] ** e
        cols.append(col)
    return np.column_stack(cols)


def evaluate(model: PolynomialSurrogate, x):
    return model.evaluate(x)


def gradient(model: PolynomialSurrogate, x):
    return model.gradient(x)


def save_model(model: PolynomialSurrogate, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def load_model_file(path: str | Path) -> PolynomialSurrogate:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model file not found: {path}")
    return PolynomialSurrogate.from_dict(json.loads(path.read_text()))


# --------------------------------------------------------------------------
# bases

def linear_basis(labels: Sequence[str]) -> list[Term]:
    return [term(lab) for lab in labels]


def interaction_basis(labels: Sequence[str], order: int = 2) -> list[Term]:
    """Main effects plus all interactions up to ``order`` factors (no squares)."""
    from itertools import combinations

    out = []
    for k in range(1, order + 1):
        out.extend(term(*c) for c in combinations(labels, k))
    return out


def quadratic_basis(labels: Sequence[str]) -> list[Term]:
    """Full second-order basis: main effects, two-factor interactions, pure squares."""
    return interaction_basis(labels, 2) + [term(lab, lab) for lab in labels]


# --------------------------------------------------------------------------
# data

@dataclass(frozen=True)
class ResponseDataset:
    design: DesignMatrix
    responses: Mapping[str, np.ndarray]
    units: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        resp = {}
        for name, vals in self.responses.items():
            arr = np.asarray(vals, dtype=float).reshape(-1)
            if arr.shape[0] != len(self.design):
                raise SurrogateError(
                    f"response {name!r} has {arr.shape[0]} values for {len(self.design)} design rows"
                )
            if not np.all(np.isfinite(arr)):
                raise SurrogateError(f"response {name!r} contains non-finite values")
            arr.setflags(write=False)
            resp[name] = arr
        units = {name: self.units.get(name, RESPONSE_UNITS.get(name, "")) for name in resp}
        object.__setattr__(self, "responses", resp)
        object.__setattr__(self, "units", units)

    def __len__(self) -> int:
        return len(self.design)

    def response(self, name: str) -> np.ndarray:
        try:
            return self.responses[name]
        except KeyError:
            raise SurrogateError(
                f"dataset has no response {name!r} (available: {sorted(self.responses)})"
            ) from None

    def points(self, labels: Sequence[str] | None = None) -> np.ndarray:
        """Design rows with columns arranged in ``labels`` order."""
        rows = self.design.rows
        if labels is None or tuple(labels) == self.design.variable_labels:
            return rows
        idx = []
        for lab in labels:
            if lab not in self.design.variable_labels:
                raise SurrogateError(f"dataset has no design column {lab!r}")
            idx.append(self.design.variable_labels.index(lab))
        return rows[:, idx]

    def subset(self, mask) -> "ResponseDataset":
        mask = np.asarray(mask)
        idx = np.flatnonzero(mask) if mask.dtype == bool else mask
        return ResponseDataset(
            self.design.subset(idx), {k: v[idx] for k, v in self.responses.items()}, self.units
        )


def write_dataset_csv(dataset: ResponseDataset, path: str | Path) -> None:
    names = list(dataset.responses)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(dataset.design.variable_labels) + ["provenance"] + names)
        for i, row in enumerate(dataset.design.rows):
            w.writerow(
                [format_number(v) for v in row]
                + [dataset.design.provenance[i]]
                + [repr(float(dataset.responses[n][i])) for n in names]
            )


def read_dataset_csv(path: str | Path, labels: Sequence[str] | None = None) -> ResponseDataset:
    """Read a dataset CSV.

    Columns named like a known response (``sigma_F_MPa`` ...) are responses,
    an optional ``provenance`` column carries row tags, everything else is a
    design column. When ``labels`` is given the design columns must match it
    exactly (any order).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SurrogateError(f"{path}: empty file") from None
        records = [r for r in reader if r]
    if len(set(header)) != len(header):
        raise SurrogateError(f"{path}: duplicate column names in header")
    resp_cols = [h for h in header if h in RESPONSE_UNITS]
    design_cols = [h for h in header if h not in RESPONSE_UNITS and h != "provenance"]
    if labels is not None:
        extra = set(design_cols) - set(labels)
        missing = set(labels) - set(design_cols)
        if extra or missing:
            raise SurrogateError(
                f"{path}: design columns do not match labels (missing {sorted(missing)}, unexpected {sorted(extra)})"
            )
        design_cols = list(labels)
    if not design_cols:
        raise SurrogateError(f"{path}: no design columns")
    col = {h: i for i, h in enumerate(header)}
    rows, prov, resp = [], [], {h: [] for h in resp_cols}
    for lineno, rec in enumerate(records, start=2):
        if len(rec) != len(header):
            raise SurrogateError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
        try:
            rows.append([float(rec[col[h]]) for h in design_cols])
            for h in resp_cols:
                resp[h].append(float(rec[col[h]]))
        except ValueError as exc:
            raise SurrogateError(f"{path}:{lineno}: {exc}") from None
        prov.append(rec[col["provenance"]] if "provenance" in col else "external")
    design = DesignMatrix(tuple(design_cols), np.array(rows).reshape(-1, len(design_cols)), tuple(prov))
    return ResponseDataset(design, {h: np.array(v) for h, v in resp.items()})


# --------------------------------------------------------------------------
# fitting and diagnostics

def _as_basis(basis: Iterable) -> list[Term]:
    out = []
    for b in basis:
        if isinstance(b, Term):
            out.append(Term(b.factors))
        elif isinstance(b, str):
            out.append(term(b))
        else:
            out.append(term(*b))
    return out


def fit(dataset: ResponseDataset, response_name: str, basis: Iterable,
        rcond: float = 1e-10) -> PolynomialSurrogate:
    """Least-squares fit of ``intercept + sum(coef * monomial)`` via pivoted QR.

    ``basis`` holds term skeletons (their coefficients are ignored), label
    tuples like ``("x1", "x2")`` or ``("x2", "x2")`` for a square, or bare labels.
    """
    terms = _as_basis(basis)
    labels = dataset.design.variable_labels
    y = dataset.response(response_name)
    X = basis_matrix(terms, labels, dataset.design.rows)
    n, p = X.shape
    if n < p + 1:
        raise SurrogateError(f"{n} rows cannot support {p} parameters (need at least {p + 1})")
    # validates labels and duplicate terms before any numerics
    PolynomialSurrogate(response_name, RESPONSE_UNITS.get(response_name, "MPa"), labels, 0.0, tuple(terms))

    Q, R, piv = linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rcond * diag[0])) if diag.size and diag[0] > 0 else 0
    if rank < p:
        names = ["intercept"] + [t.describe() for t in terms]
        bad = [names[j] for j in piv[rank:]]
        raise RankDeficientError(
            f"basis is rank deficient on this design (rank {rank} < {p}); "
            f"dependent columns: {', '.join(bad)}",
            [terms[j - 1] for j in piv[rank:] if j > 0],
        )
    z = linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty(p)
    beta[piv] = z
    resid = y - X @ beta
    unit = dataset.units.get(response_name) or RESPONSE_UNITS.get(response_name, "MPa")
    return PolynomialSurrogate(
        response_name=response_name,
        unit=unit,
        variable_labels=labels,
        intercept=beta[0],
        terms=tuple(Term(t.factors, b) for t, b in zip(terms, beta[1:])),
        residual_std=float(math.sqrt(resid @ resid / (n - p))),
        mean_residual=float(resid.mean()),
    )


@dataclass(frozen=True)
class ResidualDiagnostics:
    residuals: np.ndarray
    residual_std: float
    mean_residual: float
    qq_pairs: np.ndarray  # columns: theoretical (scaled normal quantile), observed (sorted residual)


def residual_diagnostics(model: PolynomialSurrogate, dataset: ResponseDataset) -> ResidualDiagnostics:
    """Residuals (observed - predicted) with normal Q-Q pairs at plotting positions (i - 0.5)/N."""
    n = len(dataset)
    if n == 0:
        raise SurrogateError("empty dataset")
    y = dataset.response(model.response_name)
    resid = y - model.evaluate(dataset.points(model.variable_labels))
    dof = n - model.n_terms
    std = float(math.sqrt(resid @ resid / dof)) if dof > 0 else float(np.sqrt(np.mean(resid**2)))
    q = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    qq = np.column_stack([q * std, np.sort(resid)])
    return ResidualDiagnostics(resid, std, float(resid.mean()), qq)


@dataclass(frozen=True)
class CurvatureCheck:
    factorial_mean: float
    center_response: float
    delta: float
    threshold: float
    significant: bool


def curvature_check(dataset: ResponseDataset, response_name: str, k_sigma: float = 3.0) -> CurvatureCheck:
    """Compare the factorial-block mean with the centre-point mean.

    Linear and interaction terms average out over a full factorial, so any
    gap comes from pure-quadratic curvature. The gap is flagged when it
    exceeds ``k_sigma`` standard errors, the error level taken from a
    quadratic-free fit of the factorial rows.
    """
    prov = np.array(dataset.design.provenance)
    rows = dataset.design.rows
    fact = (prov == "factorial") | ((prov == "external") & np.all(np.abs(rows) == 1.0, axis=1))
    center = (prov == "center") | ((prov == "external") & np.all(rows == 0.0, axis=1))
    if center.sum() < 1:
        raise SurrogateError("curvature check needs at least one centre row")
    if fact.sum() < 2:
        raise SurrogateError("curvature check needs at least two factorial rows")
    y = dataset.response(response_name)
    f_mean = float(y[fact].mean())
    c_mean = float(y[center].mean())
    delta = abs(f_mean - c_mean)

    fdata = dataset.subset(fact)
    labels = dataset.design.variable_labels
    s = float(np.std(y[fact], ddof=1))
    for basis in (interaction_basis(labels, 2), linear_basis(labels)):
        if len(fdata) >= len(basis) + 2:
            try:
                s = fit(fdata, response_name, basis).residual_std
                break
            except RankDeficientError:
                continue
    threshold = k_sigma * s * math.sqrt(1.0 / fact.sum() + 1.0 / center.sum())
    return CurvatureCheck(f_mean, c_mean, delta, threshold, bool(delta > threshold))
