"""Turn design matrices into response datasets.

Two evaluators are provided: the built-in one evaluates surrogate models
pointwise (optionally with seeded Gaussian noise), the external one joins an
externally produced CSV on the codified coordinates of each design row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .doe import DesignMatrix
from .published_models import PUBLISHED_MODEL_IDS, load_published_model
from .surrogate import PolynomialSurrogate, ResponseDataset, load_model_file, read_dataset_csv

JOIN_TOL = 1e-9


class IngestionError(ValueError):
    pass


def _resolve_model(ref) -> PolynomialSurrogate:
    if isinstance(ref, PolynomialSurrogate):
        return ref
    if ref in PUBLISHED_MODEL_IDS:
        return load_published_model(ref)
    return load_model_file(ref)


@dataclass(frozen=True)
class BuiltinEvaluator:
    """Exact surrogate evaluations; ``noise_sigma`` maps response names to a noise std."""

    models: tuple[PolynomialSurrogate, ...]
    noise_sigma: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        models = tuple(_resolve_model(m) for m in self.models)
        names = [m.response_name for m in models]
        if len(set(names)) != len(names):
            raise IngestionError(f"duplicate response names among models: {names}")
        unknown = set(self.noise_sigma) - set(names)
        if unknown:
            raise IngestionError(f"noise given for unknown responses {sorted(unknown)}")
        if any(s < 0 for s in self.noise_sigma.values()):
            raise IngestionError("noise sigma must be non-negative")
        object.__setattr__(self, "models", models)

    @property
    def response_names(self) -> tuple[str, ...]:
        return tuple(m.response_name for m in self.models)

    def evaluate(self, design: DesignMatrix) -> ResponseDataset:
        rng = np.random.default_rng(self.seed)
        responses, units = {}, {}
        for m in self.models:
            if len(design) == 0:
                y = np.zeros(0)
            else:
                missing = set(m.variable_labels) - set(design.variable_labels)
                if missing:
                    raise IngestionError(f"design lacks columns {sorted(missing)} needed by {m.response_name}")
                idx = [design.variable_labels.index(lab) for lab in m.variable_labels]
                y = np.asarray(m.evaluate(design.rows[:, idx]), dtype=float).reshape(-1)
            sigma = self.noise_sigma.get(m.response_name, 0.0)
            if sigma > 0:
                y = y + rng.normal(0.0, sigma, len(y))
            responses[m.response_name] = y
            units[m.response_name] = m.unit
        return ResponseDataset(design, responses, units)


@dataclass(frozen=True)
class ExternalCSVEvaluator:
    """Responses from a CSV in the dataset format, joined on codified coordinates."""

    path: Path
    responses: Sequence[str] | None = None
    tol: float = JOIN_TOL

    def evaluate(self, design: DesignMatrix) -> ResponseDataset:
        path = Path(self.path)
        data = read_dataset_csv(path, design.variable_labels)
        names = list(self.responses) if self.responses is not None else list(data.responses)
        missing_resp = set(names) - set(data.responses)
        if missing_resp:
            raise IngestionError(f"{path}: missing response columns {sorted(missing_resp)}")
        ext = data.points(design.variable_labels)

        order = np.empty(len(design), dtype=int)
        used = np.zeros(len(ext), dtype=bool)
        missing, duplicated = [], []
        for i, row in enumerate(design.rows):
            hits = np.flatnonzero(np.all(np.abs(ext - row) <= self.tol, axis=1)) if len(ext) else []
            if len(hits) == 0:
                missing.append(i)
            elif len(hits) > 1:
                duplicated.append((i, [int(h) for h in hits]))
            else:
                order[i] = hits[0]
                used[hits[0]] = True
        problems = []
        if missing:
            shown = "; ".join(f"row {i} at {list(design.rows[i])}" for i in missing[:5])
            problems.append(f"{len(missing)} design row(s) without data: {shown}")
        if duplicated:
            shown = "; ".join(f"row {i} matched data rows {h}" for i, h in duplicated[:5])
            problems.append(f"{len(duplicated)} design row(s) matched more than once: {shown}")
        unmatched = np.flatnonzero(~used)
        if not missing and not duplicated and len(unmatched):
            problems.append(f"{len(unmatched)} data row(s) match no design row: indices {unmatched[:5].tolist()}")
        if problems:
            raise IngestionError(f"{path}: " + " | ".join(problems))
        return ResponseDataset(design, {n: data.response(n)[order] for n in names},
                               {n: data.units[n] for n in names})


def evaluate_design(design: DesignMatrix, evaluator) -> ResponseDataset:
    """One response row per design row, in design order."""
    return evaluator.evaluate(design)
