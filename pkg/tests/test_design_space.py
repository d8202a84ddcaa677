import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxwing_doe.design_space import (
    DesignSpace,
    DesignSpaceError,
    DesignVariable,
    LinkageRule,
    TaperLaw,
    apply_linkages,
    codify,
    decode,
    load_space,
    taper_value,
)

SKIN = DesignVariable("x2", "t_sk_FB", 6.0, 14.0)


def test_step_is_half_range():
    assert SKIN.step == 4.0
    assert SKIN.midpoint == 10.0


@pytest.mark.parametrize("value, expected", [(14.0, 1.0), (10.0, 0.0), (6.0, -1.0)])
def test_codify_bounds_and_midpoint(value, expected):
    assert codify(value, SKIN) == expected


def test_codify_reference_skin():
    assert codify(10.3, SKIN) == pytest.approx(0.075, abs=1e-12)


def test_decode_examples():
    assert decode(-1, DesignVariable("x5", "h_st_FT", 40, 70)) == 40.0
    assert decode(0.527, DesignVariable("x4", "t_st_F", 1.5, 7.0)) == pytest.approx(5.7, abs=0.01)
    assert decode(0.888, DesignVariable("x2", "t_sk_FB", 1.25, 5.0)) == pytest.approx(4.79, abs=0.01)


def test_values_outside_range_codify_beyond_one():
    # the reference configuration has an 8 mm stringer on a 1.5-7 mm range
    assert codify(8.0, DesignVariable("x4", "t_st_F", 1.5, 7.0)) > 1.0


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(DesignSpaceError):
        codify(bad, SKIN)
    with pytest.raises(DesignSpaceError):
        decode(bad, SKIN)


def test_variable_invariants():
    with pytest.raises(DesignSpaceError):
        DesignVariable("x1", "a", 5.0, 5.0)
    with pytest.raises(DesignSpaceError):
        DesignVariable("x1", "a", 1.0, 2.0, unit="inch")


@given(st.floats(-1e6, 1e6, allow_nan=False), st.floats(-100, 100), st.floats(1e-3, 100))
def test_round_trip(v, lo, width):
    var = DesignVariable("x1", "p", lo, lo + width)
    assert decode(codify(v, var), var) == pytest.approx(v, rel=1e-12, abs=1e-12 * max(1.0, abs(lo) + width))


@pytest.mark.parametrize("space_id", ["prp300", "prosib40"])
def test_builtin_bounds_map_exactly(space_id):
    space = load_space(space_id)
    for v in space.variables:
        assert codify(v.lower, v) == -1.0
        assert codify(v.upper, v) == 1.0


def test_prp300_labels_keep_sparse_numbering(prp300):
    assert prp300.labels == ("x1", "x2", "x4", "x5", "x6", "x8", "x9", "x13", "x15")
    assert prp300.fixed_parameters["tau_sk_F"] == 0.295


def test_prosib_has_nine_variables(prosib):
    assert len(prosib) == 9
    assert prosib.followers == ("h_st_FT", "h_st_FB", "h_st_RT", "h_st_RB")


def test_codify_reference_point(prp300):
    values = {"t_sk_FB": 10.3, "t_sk_FT": 8.3, "t_st_F": 5.7, "h_st_FT": 40, "h_st_FB": 40,
              "t_sk_RT": 6, "h_st_RT": 40, "alpha_st_F": 0.7, "tau_sk_R": 0.25}
    x = prp300.codify_point(values)
    np.testing.assert_allclose(x, [-0.425, 0.075, 0.527, -1, -1, -1, -1, -1, -1], atol=0.01)


def test_codify_point_midpoints_give_zero(prp300):
    x = prp300.codify_point({v.name: v.midpoint for v in prp300.variables})
    assert np.all(x == 0.0)


def test_decode_point_applies_linkage(prp300):
    values = prp300.decode_point(np.zeros(len(prp300)))
    assert values["tau_web_R"] == values["tau_sk_R"] == pytest.approx(0.37)
    assert "p_st_F" not in values
    assert prp300.decode_point(np.zeros(len(prp300)), include_fixed=True)["p_st_F"] == 155.0


def test_decode_point_feeds_back(prosib):
    x = np.linspace(-1, 1, len(prosib))
    np.testing.assert_allclose(prosib.codify_point(prosib.decode_point(x, include_fixed=True)), x, atol=1e-12)


def test_codify_point_errors(prp300):
    full = {v.name: v.midpoint for v in prp300.variables}
    with pytest.raises(DesignSpaceError, match="missing"):
        prp300.codify_point({k: v for k, v in full.items() if k != "t_st_F"})
    with pytest.raises(DesignSpaceError, match="unknown"):
        prp300.codify_point({**full, "bogus": 1.0})
    with pytest.raises(DesignSpaceError, match="twice"):
        prp300.codify_point({**full, "x4": 3.0})


def test_linkage_idempotent():
    rules = [LinkageRule("h_st", "h_st_FT"), LinkageRule("h_st", "h_st_RB")]
    once = apply_linkages({"h_st": 33.0}, rules)
    assert apply_linkages(once, rules) == once


def test_linkage_validation():
    with pytest.raises(DesignSpaceError):
        LinkageRule("a", "b", relation="scale")
    with pytest.raises(DesignSpaceError):
        DesignSpace((SKIN,), (LinkageRule("t_sk_FB", "t_sk_FB"),))
    with pytest.raises(DesignSpaceError):
        DesignSpace((SKIN, DesignVariable("x2", "other", 0, 1)))


def test_space_file_round_trip(tmp_path, prp300):
    path = tmp_path / "space.json"
    path.write_text(json.dumps(prp300.to_dict()))
    assert load_space(path) == prp300


def test_missing_space_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.json"):
        load_space(tmp_path / "nope.json")


def test_taper_endpoints_and_midpoint():
    law = TaperLaw(10.0, 0.7, 2000.0, 18000.0)
    assert law(2000.0) == 10.0
    assert law(18000.0) == pytest.approx(7.0, abs=1e-12)
    assert law(10000.0) == pytest.approx(8.5, abs=1e-12)


@given(st.floats(0.1, 1.0), st.floats(0, 5000), st.floats(1000, 30000), st.floats(0.1, 50))
def test_taper_is_affine(ratio, y_root, span_extra, root):
    law = TaperLaw(root, ratio, y_root, y_root + span_extra)
    ys = np.array([y_root, y_root + span_extra / 3, y_root + span_extra])
    v = taper_value(law, ys)
    slope1 = (v[1] - v[0]) / (ys[1] - ys[0])
    slope2 = (v[2] - v[1]) / (ys[2] - ys[1])
    assert slope1 == pytest.approx(slope2, rel=1e-9, abs=1e-12)
    assert v[0] == pytest.approx(root, rel=1e-12)
    assert v[2] == pytest.approx(ratio * root, rel=1e-12)


def test_taper_degenerate_span():
    with pytest.raises(DesignSpaceError):
        TaperLaw(10.0, 0.7, 100.0, 100.0)(50.0)
