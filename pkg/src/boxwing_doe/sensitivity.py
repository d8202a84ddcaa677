"""Factorial effects, Pareto ranking and plot-data exports.

The effect of a factor (or a product of factors) is the absolute difference
between the response sums at its two levels divided by 2^(n-1), i.e. the
difference of the level means. Only the two-level factorial block of a
dataset enters these contrasts.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .surrogate import ResponseDataset, SurrogateError

DEFAULT_THRESHOLD = 0.1
MAX_INTERACTION_ORDER = 3


class EffectError(ValueError):
    pass


def factorial_subset(dataset: ResponseDataset) -> ResponseDataset:
    """Rows tagged ``factorial`` (or untagged rows lying on cube corners)."""
    prov = np.array(dataset.design.provenance)
    corners = np.all(np.abs(dataset.design.rows) == 1.0, axis=1)
    mask = (prov == "factorial") | ((prov == "external") & corners)
    return dataset.subset(mask)


def _contrast_column(dataset: ResponseDataset, labels: Sequence[str]) -> np.ndarray:
    rows = dataset.design.rows
    if len(rows) == 0:
        raise EffectError("no rows")
    if not np.all(np.abs(rows) == 1.0):
        raise EffectError("dataset contains non-factorial rows; filter with factorial_subset() first")
    if len(set(labels)) != len(labels):
        raise EffectError(f"labels must be distinct: {labels}")
    try:
        idx = [dataset.design.variable_labels.index(lab) for lab in labels]
    except ValueError:
        raise EffectError(f"unknown label among {labels}") from None
    col = np.prod(rows[:, idx], axis=1)
    n_low = int(np.sum(col < 0))
    if n_low * 2 != len(col):
        raise EffectError(f"unbalanced levels for {'*'.join(labels)}: {n_low} low vs {len(col) - n_low} high")
    return col


def _contrast(dataset: ResponseDataset, response_name: str, labels: Sequence[str]) -> float:
    col = _contrast_column(dataset, labels)
    y = dataset.response(response_name)
    half = len(y) // 2
    return abs(y[col < 0].sum() - y[col > 0].sum()) / half


def main_effect(dataset: ResponseDataset, response_name: str, label: str) -> float:
    return _contrast(dataset, response_name, [label])


def interaction_effect(dataset: ResponseDataset, response_name: str, labels: Sequence[str]) -> float:
    labels = list(labels)
    if not 2 <= len(labels) <= MAX_INTERACTION_ORDER:
        raise EffectError(f"interactions of 2..{MAX_INTERACTION_ORDER} factors only, got {len(labels)}")
    return _contrast(dataset, response_name, labels)


@dataclass(frozen=True)
class Effect:
    factors: tuple[str, ...]
    sigma: float
    normalized: float = 1.0
    significant: bool = True

    @property
    def name(self) -> str:
        return "*".join(self.factors)


@dataclass(frozen=True)
class EffectTable:
    entries: tuple[Effect, ...]
    response_name: str = ""

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def order(self) -> list[str]:
        return [e.name for e in self.entries]

    @property
    def significant(self) -> list[Effect]:
        return [e for e in self.entries if e.significant]


def _natural_key(label: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", label)]


def pareto(effects: Iterable, threshold: float = DEFAULT_THRESHOLD, response_name: str = "") -> EffectTable:
    """Sort effects in decreasing magnitude and flag those with sigma/sigma_max >= threshold.

    ``effects`` holds :class:`Effect` objects or ``(factors, sigma)`` pairs,
    where ``factors`` is a label or a tuple of labels. Ties are broken by the
    factor labels in natural order (x2 before x13).
    """
    items = []
    for e in effects:
        if isinstance(e, Effect):
            factors, sigma = e.factors, e.sigma
        else:
            factors, sigma = e
            factors = (factors,) if isinstance(factors, str) else tuple(factors)
        items.append((tuple(factors), float(sigma)))
    if not items:
        raise EffectError("pareto() needs at least one effect")
    items.sort(key=lambda it: (-it[1], [_natural_key(f) for f in it[0]]))
    smax = items[0][1]
    entries = []
    for factors, sigma in items:
        norm = sigma / smax if smax > 0 else 1.0
        entries.append(Effect(factors, sigma, norm, bool(norm >= threshold)))
    return EffectTable(tuple(entries), response_name)


def compute_effects(dataset: ResponseDataset, response_name: str, max_order: int = 1,
                    threshold: float = DEFAULT_THRESHOLD, labels: Sequence[str] | None = None) -> EffectTable:
    """Main effects (and interactions up to ``max_order``) of a dataset, Pareto-ordered."""
    if not 1 <= max_order <= MAX_INTERACTION_ORDER:
        raise EffectError(f"max_order must be 1..{MAX_INTERACTION_ORDER}")
    data = factorial_subset(dataset)
    labels = list(labels or dataset.design.variable_labels)
    effects = []
    for k in range(1, max_order + 1):
        for combo in combinations(labels, k):
            effects.append((combo, _contrast(data, response_name, combo)))
    return pareto(effects, threshold, response_name)


@dataclass(frozen=True)
class LevelMeans:
    label: str
    mean_low: float
    mean_high: float

    @property
    def difference(self) -> float:
        return self.mean_high - self.mean_low


def level_means(dataset: ResponseDataset, response_name: str, label: str) -> LevelMeans:
    col = _contrast_column(dataset, [label])
    y = dataset.response(response_name)
    return LevelMeans(label, float(y[col < 0].mean()), float(y[col > 0].mean()))


# --------------------------------------------------------------------------
# exports

def write_effects_csv(table: EffectTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["factors", "sigma", "normalized", "significant"])
        for e in table:
            w.writerow([e.name, repr(e.sigma), repr(e.normalized), str(e.significant).lower()])


def read_effects_csv(path: str | Path) -> EffectTable:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    entries = tuple(
        Effect(tuple(r["factors"].split("*")), float(r["sigma"]), float(r["normalized"]),
               r["significant"] == "true")
        for r in rows
    )
    return EffectTable(entries)


def scatter_data(dataset: ResponseDataset, response_name: str) -> list[tuple[str, float, float]]:
    """(label, level, response) triples for every factorial row and factor."""
    data = factorial_subset(dataset)
    y = data.response(response_name)
    out = []
    for j, lab in enumerate(data.design.variable_labels):
        out.extend((lab, float(lv), float(v)) for lv, v in zip(data.design.rows[:, j], y))
    return out


def write_plot_data(dataset: ResponseDataset, response_name: str, out_dir: str | Path,
                    table: EffectTable | None = None) -> dict[str, Path]:
    """Write scatter, mean, Youden and Pareto CSVs for one response; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = factorial_subset(dataset)
    if len(data) == 0:
        raise SurrogateError("no factorial rows to export")
    paths = {}

    p = out_dir / f"{response_name}_scatter.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["factor", "level", "response"])
        for lab, lv, v in scatter_data(data, response_name):
            w.writerow([lab, int(lv), repr(v)])
    paths["scatter"] = p

    means = [level_means(data, response_name, lab) for lab in data.design.variable_labels]
    p = out_dir / f"{response_name}_means.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["factor", "level", "mean"])
        for m in means:
            w.writerow([m.label, -1, repr(m.mean_low)])
            w.writerow([m.label, 1, repr(m.mean_high)])
    paths["mean"] = p

    p = out_dir / f"{response_name}_youden.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["factor", "mean_low", "mean_high"])
        for m in means:
            w.writerow([m.label, repr(m.mean_low), repr(m.mean_high)])
    paths["youden"] = p

    table = table or compute_effects(data, response_name)
    p = out_dir / f"{response_name}_pareto.csv"
    write_effects_csv(table, p)
    paths["pareto"] = p
    return paths
