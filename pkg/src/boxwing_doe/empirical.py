"""Empirical box-wing wing-mass estimate (cantilever formula with box-wing correction).

    M_W = 0.028 [ b S / cos(L) * (1 + 2 t)/(1 + 3 t) * (n_z M / S)^0.3 * (V_D / (t/c))^0.5 ]^0.9

with b in m, S in m^2, the quarter-chord sweep L in degrees, taper ratio t,
take-off mass M in kg and dive speed V_D in m/s. Kinked planforms must be
reduced to an equivalent simply tapered wing beforehand.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Mapping

COEFFICIENT = 0.028
EXPONENT = 0.9


class WingDomainError(ValueError):
    pass


@dataclass(frozen=True)
class WingDescription:
    span_b: float  # m
    area_S: float  # m^2
    sweep_quarter_chord: float  # deg, negative for forward sweep
    taper_lambda: float
    thickness_to_chord: float
    load_factor_nz: float
    mtom: float  # kg
    dive_speed_VD: float  # m/s

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise WingDomainError(f"{f.name} must be a finite number, got {v!r}")
        for name in ("span_b", "area_S", "thickness_to_chord", "dive_speed_VD", "mtom", "load_factor_nz"):
            if getattr(self, name) <= 0:
                raise WingDomainError(f"{name} must be positive")
        if abs(self.sweep_quarter_chord) >= 90:
            raise WingDomainError("|sweep| must be below 90 degrees")
        if not 0 < self.taper_lambda <= 1:
            raise WingDomainError("taper ratio must lie in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "WingDescription":
        names = {f.name for f in fields(cls)}
        missing = names - set(data)
        if missing:
            raise WingDomainError(f"wing description missing {sorted(missing)}")
        return cls(**{k: data[k] for k in names})


def jemitola_wing_mass(w: WingDescription) -> float:
    """Structural mass of one wing of the box-wing pair, kg."""
    planform = w.span_b * w.area_S / math.cos(math.radians(w.sweep_quarter_chord))
    taper = (1 + 2 * w.taper_lambda) / (1 + 3 * w.taper_lambda)
    loading = (w.load_factor_nz * w.mtom / w.area_S) ** 0.3
    speed = (w.dive_speed_VD / w.thickness_to_chord) ** 0.5
    return COEFFICIENT * (planform * taper * loading * speed) ** EXPONENT


def load_wing(path: str | Path) -> tuple[WingDescription, dict]:
    """Read a wing JSON file; returns the description and any ``reference`` block."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"wing file not found: {path}")
    data = json.loads(path.read_text())
    return WingDescription.from_dict(data.get("wing", data)), dict(data.get("reference", {}))
