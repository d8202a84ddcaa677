import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxwing_doe.empirical import WingDescription, WingDomainError, jemitola_wing_mass, load_wing

FRONT = dict(span_b=35.0, area_S=153.14, sweep_quarter_chord=38.1, taper_lambda=0.29,
             thickness_to_chord=0.11, load_factor_nz=2.5, mtom=126414.0, dive_speed_VD=245.0)


def wing(**changes):
    return WingDescription(**{**FRONT, **changes})


def test_hand_computation():
    # independent evaluation of the formula, term by term
    w = wing()
    inner = (35.0 * 153.14 / math.cos(math.radians(38.1)) * (1 + 0.58) / (1 + 0.87)
             * (2.5 * 126414.0 / 153.14) ** 0.3 * (245.0 / 0.11) ** 0.5)
    assert jemitola_wing_mass(w) == pytest.approx(0.028 * inner**0.9, rel=1e-12)


def test_doubling_load_factor():
    assert jemitola_wing_mass(wing(load_factor_nz=5.0)) / jemitola_wing_mass(wing()) == pytest.approx(2**0.27, abs=1e-10)


@given(st.floats(0.5, 10), st.floats(1e4, 1e6))
def test_load_scaling(k, mtom):
    base = jemitola_wing_mass(wing(mtom=mtom))
    assert jemitola_wing_mass(wing(mtom=k * mtom)) / base == pytest.approx(k**0.27, rel=1e-10)


@given(st.floats(0.5, 4))
def test_speed_scaling(k):
    assert jemitola_wing_mass(wing(dive_speed_VD=245 * k)) / jemitola_wing_mass(wing()) == pytest.approx(k**0.45, rel=1e-10)


@given(st.floats(-89, 89))
def test_sweep_symmetry(sweep):
    assert jemitola_wing_mass(wing(sweep_quarter_chord=sweep)) == pytest.approx(
        jemitola_wing_mass(wing(sweep_quarter_chord=-sweep)), rel=1e-14)


def test_monotonicity():
    assert jemitola_wing_mass(wing(thickness_to_chord=0.14)) < jemitola_wing_mass(wing())
    assert jemitola_wing_mass(wing(span_b=40.0)) > jemitola_wing_mass(wing())


@pytest.mark.parametrize("field, value", [
    ("area_S", 0.0), ("span_b", -1.0), ("thickness_to_chord", 0.0), ("dive_speed_VD", 0.0),
    ("mtom", -5.0), ("sweep_quarter_chord", 90.0), ("sweep_quarter_chord", -95.0),
    ("taper_lambda", 0.0), ("taper_lambda", 1.2), ("load_factor_nz", math.nan),
])
def test_domain_errors(field, value):
    with pytest.raises(WingDomainError):
        wing(**{field: value})


def test_wing_file(tmp_path):
    path = tmp_path / "w.json"
    path.write_text(json.dumps({"wing": FRONT, "reference": {"mass_kg": 8870}}))
    w, ref = load_wing(path)
    assert w == wing() and ref == {"mass_kg": 8870}
    path.write_text(json.dumps({k: v for k, v in FRONT.items() if k != "mtom"}))
    with pytest.raises(WingDomainError, match="mtom"):
        load_wing(path)
    with pytest.raises(FileNotFoundError):
        load_wing(tmp_path / "none.json")
