"""Physical design variables, codified [-1, 1] coordinates and spanwise taper laws.

Codified coordinates follow the usual DoE convention: the lower bound of a
variable maps to -1, the upper bound to +1 and the midpoint to 0. Values
outside the bounds are allowed and simply codify to |x| > 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

BUILTIN_SPACES = ("prp300", "prosib40")
UNITS = ("millimetre", "ratio")


class DesignSpaceError(ValueError):
    """Malformed design space or a point that does not fit it."""


def _check_finite(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DesignSpaceError(f"{what} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class DesignVariable:
    label: str
    name: str
    lower: float
    upper: float
    unit: str = "millimetre"

    def __post_init__(self):
        _check_finite(self.lower, f"{self.label}.lower")
        _check_finite(self.upper, f"{self.label}.upper")
        if not self.lower < self.upper:
            raise DesignSpaceError(
                f"variable {self.label}: lower ({self.lower}) must be < upper ({self.upper})"
            )
        if self.unit not in UNITS:
            raise DesignSpaceError(f"variable {self.label}: unknown unit {self.unit!r}")

    @property
    def step(self) -> float:
        """Half-range delta; codified +/-1 sits one step away from the midpoint."""
        return (self.upper - self.lower) / 2.0

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2.0


def codify(value: float, variable: DesignVariable) -> float:
    value = _check_finite(value, variable.label)
    if value == variable.lower:
        return -1.0
    if value == variable.upper:
        return 1.0
    return (value - variable.midpoint) / variable.step


def decode(x: float, variable: DesignVariable) -> float:
    x = _check_finite(x, variable.label)
    if x == -1.0:
        return variable.lower
    if x == 1.0:
        return variable.upper
    return variable.midpoint + x * variable.step


@dataclass(frozen=True)
class LinkageRule:
    """The follower parameter takes the leader variable's physical value."""

    leader: str
    follower: str
    relation: str = "identity"

    def __post_init__(self):
        if self.relation != "identity":
            raise DesignSpaceError(f"unsupported linkage relation {self.relation!r}")


@dataclass(frozen=True)
class DesignSpace:
    variables: tuple[DesignVariable, ...]
    linkages: tuple[LinkageRule, ...] = ()
    fixed_parameters: Mapping[str, float] = field(default_factory=dict)
    id: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "linkages", tuple(self.linkages))
        object.__setattr__(self, "fixed_parameters", dict(self.fixed_parameters))
        labels = [v.label for v in self.variables]
        names = [v.name for v in self.variables]
        if not labels:
            raise DesignSpaceError("design space needs at least one variable")
        for what, seq in (("label", labels), ("name", names)):
            dup = {s for s in seq if seq.count(s) > 1}
            if dup:
                raise DesignSpaceError(f"duplicate variable {what}(s): {sorted(dup)}")
        for rule in self.linkages:
            if rule.leader not in names:
                raise DesignSpaceError(f"linkage leader {rule.leader!r} is not a variable name")
            if rule.follower in names:
                raise DesignSpaceError(f"linkage follower {rule.follower!r} is a variable name")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(v.label for v in self.variables)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def __len__(self) -> int:
        return len(self.variables)

    def variable(self, key: str) -> DesignVariable:
        """Look a variable up by label or by name."""
        for v in self.variables:
            if key in (v.label, v.name):
                return v
        raise DesignSpaceError(f"unknown variable {key!r}")

    def index(self, key: str) -> int:
        return self.variables.index(self.variable(key))

    @property
    def followers(self) -> tuple[str, ...]:
        return tuple(rule.follower for rule in self.linkages)

    def codify_point(self, values: Mapping[str, float]) -> np.ndarray:
        """Physical values (keyed by name or label) -> codified vector in variable order.

        Keys naming linkage followers or fixed parameters are ignored, so the
        output of :meth:`decode_point` can be fed straight back in.
        """
        ignorable = set(self.followers) | set(self.fixed_parameters)
        by_index: dict[int, float] = {}
        for key, value in values.items():
            if key in ignorable:
                continue
            i = self.index(key)
            if i in by_index:
                raise DesignSpaceError(f"variable {key!r} given twice")
            by_index[i] = value
        missing = [v.name for i, v in enumerate(self.variables) if i not in by_index]
        if missing:
            raise DesignSpaceError(f"missing values for {missing}")
        return np.array([codify(by_index[i], v) for i, v in enumerate(self.variables)])

    def decode_point(self, x: Sequence[float], include_fixed: bool = False) -> dict[str, float]:
        x = np.asarray(x, dtype=float)
        if x.shape != (len(self),):
            raise DesignSpaceError(f"expected {len(self)} coordinates, got shape {x.shape}")
        values = {v.name: decode(xi, v) for xi, v in zip(x, self.variables)}
        values = apply_linkages(values, self.linkages)
        if include_fixed:
            for k, v in self.fixed_parameters.items():
                values.setdefault(k, v)
        return values

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "variables": [
                {"label": v.label, "name": v.name, "lower": v.lower, "upper": v.upper, "unit": v.unit}
                for v in self.variables
            ],
            "linkages": [
                {"leader": r.leader, "follower": r.follower, "relation": r.relation}
                for r in self.linkages
            ],
            "fixed_parameters": dict(self.fixed_parameters),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DesignSpace":
        try:
            variables = [
                DesignVariable(
                    label=str(v["label"]),
                    name=str(v["name"]),
                    lower=float(v["lower"]),
                    upper=float(v["upper"]),
                    unit=v.get("unit", "millimetre"),
                )
                for v in data["variables"]
            ]
        except KeyError as exc:
            raise DesignSpaceError(f"variable entry missing field {exc}") from None
        linkages = [
            LinkageRule(r["leader"], r["follower"], r.get("relation", "identity"))
            for r in data.get("linkages", [])
        ]
        fixed = {k: float(v) for k, v in data.get("fixed_parameters", {}).items()}
        return cls(tuple(variables), tuple(linkages), fixed, id=data.get("id", "custom"))


def codify_point(values: Mapping[str, float], space: DesignSpace) -> np.ndarray:
    return space.codify_point(values)


def decode_point(x: Sequence[float], space: DesignSpace, include_fixed: bool = False) -> dict[str, float]:
    return space.decode_point(x, include_fixed=include_fixed)


def apply_linkages(values: Mapping[str, float], linkages: Iterable[LinkageRule]) -> dict[str, float]:
    out = dict(values)
    for rule in linkages:
        out[rule.follower] = out[rule.leader]
    return out


def load_space(ref: str | Path) -> DesignSpace:
    """Load a built-in space by id (``prp300``, ``prosib40``) or a JSON file path."""
    if str(ref) in BUILTIN_SPACES:
        text = resources.files("boxwing_doe.data.spaces").joinpath(f"{ref}.json").read_text()
    else:
        path = Path(ref)
        if not path.is_file():
            raise FileNotFoundError(f"design space file not found: {path}")
        text = path.read_text()
    return DesignSpace.from_dict(json.loads(text))


@dataclass(frozen=True)
class TaperLaw:
    """Affine spanwise variation from ``root_value`` at ``y_root`` to ``ratio * root_value`` at the tip."""

    root_value: float
    ratio: float
    y_root: float
    half_span: float

    def __call__(self, y):
        return taper_value(self, y)


def taper_value(law: TaperLaw, y):
    denom = law.y_root - law.half_span
    if denom == 0:
        raise DesignSpaceError("degenerate span: y_root equals half_span")
    scale = ((1.0 - law.ratio) * np.asarray(y, dtype=float) + law.ratio * law.y_root - law.half_span) / denom
    out = scale * law.root_value
    return float(out) if np.ndim(out) == 0 else out
