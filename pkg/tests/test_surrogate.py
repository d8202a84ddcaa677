import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from boxwing_doe.doe import DesignMatrix, ccf, deduplicate, full_factorial
from boxwing_doe.ingestion import BuiltinEvaluator, evaluate_design
from boxwing_doe.published_models import PUBLISHED_MODEL_IDS, load_published_model
from boxwing_doe.surrogate import (
    PolynomialSurrogate,
    RankDeficientError,
    ResponseDataset,
    SurrogateError,
    Term,
    curvature_check,
    fit,
    interaction_basis,
    linear_basis,
    load_model_file,
    quadratic_basis,
    read_dataset_csv,
    residual_diagnostics,
    save_model,
    term,
    write_dataset_csv,
)

LABELS = ("x1", "x2", "x3")


def toy(intercept=5.0, **coefs):
    terms = []
    for key, c in coefs.items():
        terms.append(term(*key.split("_"), coefficient=c))
    return PolynomialSurrogate("sigma_F_MPa", "MPa", LABELS, intercept, tuple(terms))


def dataset(model, design):
    return evaluate_design(design, BuiltinEvaluator((model,)))


def test_term_invariants():
    assert term("x2", "x2").is_pure_quadratic
    assert term("x1", "x2").degree == 2
    with pytest.raises(SurrogateError):
        Term((("x1", 2), ("x2", 1)))
    with pytest.raises(SurrogateError):
        Term((("x1", 3),))
    with pytest.raises(SurrogateError):
        Term((("x1", 1), ("x1", 1)))
    with pytest.raises(SurrogateError):
        Term(())
    with pytest.raises(SurrogateError):
        term("x1", "x2", "x3", "x4", "x5")


def test_model_rejects_duplicates_and_unknown_labels():
    with pytest.raises(SurrogateError, match="duplicate"):
        PolynomialSurrogate("r", "MPa", LABELS, 0.0, (term("x1", "x2"), term("x2", "x1")))
    with pytest.raises(SurrogateError, match="unknown label"):
        PolynomialSurrogate("r", "MPa", LABELS, 0.0, (term("x9"),))
    with pytest.raises(SurrogateError):
        PolynomialSurrogate("r", "psi", LABELS, 0.0)


def test_evaluate_by_hand():
    m = toy(2.0, x1=3.0, x1_x2=-1.5, x3_x3=0.5, x1_x2_x3=2.0)
    x = np.array([0.5, -1.0, 0.2])
    expected = 2.0 + 3 * 0.5 - 1.5 * 0.5 * -1.0 + 0.5 * 0.04 + 2.0 * 0.5 * -1.0 * 0.2
    assert m(x) == pytest.approx(expected, rel=1e-14)
    assert m.evaluate(np.vstack([x, x])) == pytest.approx([expected, expected])


def test_evaluate_dimension_mismatch():
    with pytest.raises(SurrogateError, match="coordinates"):
        toy(x1=1.0).evaluate([0.0, 0.0])


def test_linear_gradient_is_constant():
    m = toy(1.0, x1=2.0, x2=-3.0, x3=0.25)
    for x in np.random.default_rng(1).uniform(-1, 1, (5, 3)):
        np.testing.assert_array_equal(m.gradient(x), [2.0, -3.0, 0.25])


def test_square_has_zero_slope_at_origin():
    assert toy(x2_x2=39.84).gradient(np.zeros(3))[1] == 0.0


def test_front_stress_gradient_at_centroid(front_stress):
    g = front_stress.gradient(np.zeros(front_stress.n_vars))
    assert g[front_stress.variable_labels.index("x2")] == pytest.approx(-51.358, abs=1e-12)


@pytest.mark.parametrize("model_id", PUBLISHED_MODEL_IDS)
def test_gradient_matches_finite_differences(model_id):
    m = load_published_model(model_id)
    pts = np.random.default_rng(7).uniform(-1, 1, (100, m.n_vars))
    h = 1e-6
    g = m.gradient(pts)
    for j in range(m.n_vars):
        e = np.zeros(m.n_vars)
        e[j] = h
        fd = (m.evaluate(pts + e) - m.evaluate(pts - e)) / (2 * h)
        np.testing.assert_allclose(g[:, j], fd, rtol=1e-5, atol=1e-5 * np.max(np.abs(g)))


@settings(max_examples=50)
@given(arrays(float, 3, elements=st.floats(-1, 1)))
def test_superposition(x):
    a = toy(1.0, x1=2.0, x1_x2=0.5)
    b = toy(-3.0, x1=1.0, x3_x3=4.0)
    assert (a + b)(x) == pytest.approx(a(x) + b(x), rel=1e-12, abs=1e-12)


def test_json_round_trip(tmp_path):
    m = toy(1.5, x1=2.0, x2_x2=-0.5, x1_x2_x3=0.125)
    path = tmp_path / "m.json"
    save_model(m, path)
    back = load_model_file(path)
    assert back == m
    assert back.coefficient("x2", "x2") == -0.5
    with pytest.raises(FileNotFoundError):
        load_model_file(tmp_path / "missing.json")


def test_fit_recovers_known_model():
    m = toy(4.0, x1=1.0, x2=-2.0, x1_x3=0.75, x2_x2=3.0)
    data = dataset(m, ccf(LABELS, 1))
    f = fit(data, "sigma_F_MPa", [t for t in m.terms])
    np.testing.assert_allclose(f.coefficients, m.coefficients, atol=1e-8)
    assert f.residual_std == pytest.approx(0.0, abs=1e-10)


def test_fit_constant_data():
    design = ccf(LABELS, 2)
    data = ResponseDataset(design, {"sigma_F_MPa": np.full(len(design), 7.5)})
    f = fit(data, "sigma_F_MPa", quadratic_basis(LABELS))
    assert f.intercept == pytest.approx(7.5, abs=1e-10)
    np.testing.assert_allclose(f.coefficients[1:], 0.0, atol=1e-10)


def test_fit_noisy_data_mean_residual_zero(front_stress, prp300):
    design = deduplicate(ccf(prp300, 8))
    data = evaluate_design(design, BuiltinEvaluator((front_stress,), {"sigma_F_MPa": 1.0}, seed=3))
    f = fit(data, "sigma_F_MPa", front_stress.terms)
    assert abs(f.mean_residual) < 1e-9
    # independent normal-equations oracle
    X = f.basis_matrix(design.rows)
    beta = np.linalg.solve(X.T @ X, X.T @ data.response("sigma_F_MPa"))
    np.testing.assert_allclose(f.coefficients, beta, rtol=1e-8, atol=1e-8)
    resid = data.response("sigma_F_MPa") - f(design.rows)
    assert np.max(np.abs(X.T @ resid)) / (np.linalg.norm(X, axis=0).max() * np.linalg.norm(resid)) < 1e-8
    assert f.residual_std == pytest.approx(np.sqrt(resid @ resid / (len(design) - f.n_terms)))


def test_fit_rank_deficient_names_terms():
    data = dataset(toy(x1=1.0), full_factorial(LABELS))
    with pytest.raises(RankDeficientError) as err:
        fit(data, "sigma_F_MPa", [term("x1"), term("x1", "x1")])
    assert "x1^2" in str(err.value)


def test_fit_needs_enough_rows():
    data = dataset(toy(x1=1.0), full_factorial(("x1", "x2", "x3")).subset(np.arange(4)))
    with pytest.raises(SurrogateError, match="cannot support"):
        fit(data, "sigma_F_MPa", quadratic_basis(LABELS))


def test_bases():
    assert len(linear_basis(LABELS)) == 3
    assert len(interaction_basis(LABELS, 3)) == 7
    assert len(quadratic_basis(LABELS)) == 9


def test_residual_diagnostics_perfect_fit():
    m = toy(1.0, x1=2.0)
    diag = residual_diagnostics(m, dataset(m, ccf(LABELS, 1)))
    assert np.all(diag.residuals == 0.0)
    assert diag.residual_std == 0.0


def test_qq_pairs_use_plotting_positions():
    m = toy(0.0, x1=1.0)
    design = DesignMatrix(LABELS, np.zeros((4, 3)), ("external",) * 4)
    data = ResponseDataset(design, {"sigma_F_MPa": [-2.0, 1.0, 0.5, 0.5]})
    diag = residual_diagnostics(m, data)
    from scipy.stats import norm

    np.testing.assert_allclose(diag.qq_pairs[:, 0], norm.ppf([0.125, 0.375, 0.625, 0.875]) * diag.residual_std)
    np.testing.assert_array_equal(diag.qq_pairs[:, 1], [-2.0, 0.5, 0.5, 1.0])
    with pytest.raises(SurrogateError):
        residual_diagnostics(m, data.subset(np.zeros(4, dtype=bool)))


def test_oracle_refit_residual_std(front_stress, prp300):
    data = dataset(front_stress, deduplicate(ccf(prp300, 8)))
    assert residual_diagnostics(fit(data, "sigma_F_MPa", front_stress.terms), data).residual_std <= 1e-6


def test_curvature_linear_model_has_none():
    data = dataset(toy(3.0, x1=1.0, x1_x2=2.0, x1_x2_x3=-1.0), ccf(LABELS, 2))
    assert curvature_check(data, "sigma_F_MPa").delta == pytest.approx(0.0, abs=1e-9)


def test_curvature_single_square():
    cc = curvature_check(dataset(toy(269.438, x2_x2=39.84), ccf(LABELS, 1)), "sigma_F_MPa")
    assert cc.delta == pytest.approx(39.84, abs=1e-9)
    assert cc.factorial_mean > cc.center_response
    assert cc.significant


def test_curvature_constant_response():
    design = ccf(LABELS, 1)
    data = ResponseDataset(design, {"sigma_F_MPa": np.ones(len(design))})
    cc = curvature_check(data, "sigma_F_MPa")
    assert cc.delta == 0.0 and not cc.significant


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=3, max_size=3))
def test_curvature_delta_is_quadratic_sum(quad):
    m = toy(10.0, x1=1.0, x2_x3=2.0, x1_x1=quad[0], x2_x2=quad[1], x3_x3=quad[2])
    cc = curvature_check(dataset(m, ccf(LABELS, 2)), "sigma_F_MPa")
    assert cc.delta == pytest.approx(abs(sum(quad)), abs=1e-9)


def test_curvature_needs_centre_and_factorial():
    m = toy(1.0, x1=1.0)
    with pytest.raises(SurrogateError, match="centre"):
        curvature_check(dataset(m, full_factorial(LABELS)), "sigma_F_MPa")


def test_dataset_validation():
    design = full_factorial(2)
    with pytest.raises(SurrogateError, match="values for"):
        ResponseDataset(design, {"mass_kg": [1.0]})
    with pytest.raises(SurrogateError, match="non-finite"):
        ResponseDataset(design, {"mass_kg": [1.0, np.nan, 2.0, 3.0]})
    data = ResponseDataset(design, {"mass_kg": [1.0, 2.0, 3.0, 4.0]})
    assert data.units["mass_kg"] == "kg"
    with pytest.raises(SurrogateError, match="no response"):
        data.response("uz_mm")


def test_dataset_csv_round_trip(tmp_path, front_stress, prp300):
    data = dataset(front_stress, ccf(prp300, 1))
    path = tmp_path / "data.csv"
    write_dataset_csv(data, path)
    back = read_dataset_csv(path, prp300.labels)
    np.testing.assert_array_equal(back.design.rows, data.design.rows)
    assert back.design.provenance == data.design.provenance
    np.testing.assert_array_equal(back.response("sigma_F_MPa"), data.response("sigma_F_MPa"))


def test_dataset_csv_strict_header(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x1,x2,mass_kg\n1,1,3\n")
    with pytest.raises(SurrogateError, match="missing"):
        read_dataset_csv(path, ("x1", "x2", "x3"))
    path.write_text("x1,x1,mass_kg\n1,1,3\n")
    with pytest.raises(SurrogateError, match="duplicate"):
        read_dataset_csv(path)
    with pytest.raises(FileNotFoundError):
        read_dataset_csv(tmp_path / "none.csv")
