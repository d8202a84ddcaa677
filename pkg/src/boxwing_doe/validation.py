"""Reproduction checks against the published numbers.

Each criterion produces a list of :class:`Check` records (computed value,
expected value, tolerance, verdict). The same registry drives the
``validate`` CLI command and the acceptance tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .design_space import codify, decode, load_space
from .doe import ccf, deduplicate, full_factorial
from .empirical import WingDescription, jemitola_wing_mass
from .ingestion import BuiltinEvaluator, evaluate_design
from .optimizer import (
    Constraint,
    SizingProblem,
    SizingResult,
    SolverOptions,
    mass_report,
    problem_from_dict,
    solve,
)
from .published_models import PUBLISHED_MODEL_IDS, load_published_model
from .sensitivity import compute_effects
from .surrogate import PolynomialSurrogate, curvature_check, fit, load_model_file, term


@dataclass(frozen=True)
class Check:
    name: str
    computed: float | str
    expected: float | str
    tolerance: str
    passed: bool
    informative: bool = False  # shown in reports, ignored by the verdict

    def line(self) -> str:
        def fmt(v):
            return f"{v:.6g}" if isinstance(v, float) else str(v)

        flag = ("ok" if self.passed else "--") if self.informative else ("PASS" if self.passed else "FAIL")
        return f"  [{flag}] {self.name}: computed {fmt(self.computed)}, expected {fmt(self.expected)} ({self.tolerance})"


@dataclass(frozen=True)
class Criterion:
    number: int
    key: str
    title: str
    run: Callable[["Context"], list[Check]]


@dataclass
class CriterionResult:
    criterion: Criterion
    checks: list[Check]

    @property
    def passed(self) -> bool:
        decisive = [c for c in self.checks if not c.informative]
        return bool(decisive) and all(c.passed for c in decisive)


def _rel(computed: float, expected: float) -> float:
    return abs(computed - expected) / abs(expected)


def rel_check(name, computed, expected, rtol) -> Check:
    return Check(name, float(computed), float(expected), f"+/- {rtol:.1%}", _rel(computed, expected) <= rtol)


def abs_check(name, computed, expected, atol) -> Check:
    return Check(name, float(computed), float(expected), f"+/- {atol:g}", abs(computed - expected) <= atol)


def _data_json(*parts: str) -> dict:
    node = resources.files("boxwing_doe.data")
    for p in parts:
        node = node.joinpath(p)
    return json.loads(node.read_text())


def builtin_problem(name: str) -> dict:
    return _data_json("problems", f"{name}.json")


def builtin_wing(name: str) -> dict:
    return _data_json("wings", f"{name}.json")


# --------------------------------------------------------------------------
# published values

REFERENCE_INTERCEPTS = {
    "prp300.sigma_front": 269.438,
    "prp300.sigma_rear": 193.116,
    "prp300.uz": 1525.664,
    "prp300.mass": 16514.7,
    "prosib.sigma_front": 177.383,
    "prosib.sigma_rear": 161.686,
    "prosib.uz": 500.339,
    "prosib.mass": 2158.0,
}

# front-wing stress main effects, Pareto order, with sigma/sigma_max in percent
FRONT_STRESS_EFFECTS = (
    ("x2", 102.6, 100), ("x4", 74.6, 73), ("x1", 64.8, 63), ("x6", 18.2, 18), ("x9", 13.9, 14),
    ("x5", 11.4, 11), ("x15", 5.7, 6), ("x13", 4.3, 4), ("x8", 3.5, 3),
)

SF12_OPTIMUM = {"mass": 14992.0, "t_sk_FB": 10.3, "t_sk_FT": 8.3, "t_st_F": 5.7,
                "sigma_front": 285.0, "tip_deflection": 1794.0}
SF15_OPTIMUM = {"mass": 8982.0 + 6900.0, "t_sk_FT": 12.7, "t_sk_FB": 12.6}
MASS_REPORT = {"total": 15585.0, "saving_percent": 12.0}
PROSIB_OPTIMUM = {"mass": 1101.8 + 859.8, "stress": 230.0}
PROSIB_DEFLECTION_LIMITS = (1105.0, 600.0)
JEMITOLA = {"prp300_front": 8870.0, "prp300_rear": 7172.0}


# --------------------------------------------------------------------------

@dataclass
class Context:
    """Shared state so that optima computed once are reused by later criteria."""

    models: Mapping[str, PolynomialSurrogate] = field(default_factory=dict)
    seed: int = 0
    _solves: dict = field(default_factory=dict)

    def model(self, model_id: str) -> PolynomialSurrogate:
        if model_id not in self.models:
            self.models = {**self.models, model_id: load_published_model(model_id)}
        return self.models[model_id]

    def problem(self, name: str, **overrides) -> tuple[SizingProblem, np.ndarray | None, SolverOptions]:
        data = {**builtin_problem(name), **overrides}
        problem, x0, options = problem_from_dict(data)
        # swap in any overridden models

        def swap(m):
            return self.model(m.metadata["id"]) if m.metadata.get("id") else m

        sc = tuple(Constraint(c.name, swap(c.model), c.limit) for c in problem.stress_constraints)
        dc = problem.deflection_constraint
        if dc is not None:
            dc = Constraint(dc.name, swap(dc.model), dc.limit)
        problem = SizingProblem(swap(problem.objective), sc, dc, problem.lower, problem.upper, problem.space)
        return problem, x0, options

    def solve(self, name: str, **overrides) -> tuple[SizingProblem, SizingResult]:
        key = (name, tuple(sorted(overrides.items())))
        if key not in self._solves:
            problem, x0, options = self.problem(name, **overrides)
            self._solves[key] = (problem, solve(problem, x0, options))
        return self._solves[key]


def _range_tol(space, name: str, frac: float = 0.02) -> float:
    v = space.variable(name)
    return frac * (v.upper - v.lower)


def crit_design(ctx: Context) -> list[Check]:
    space = load_space("prp300")
    design = ccf(space, center_replicates=8)
    counts = design.counts()
    return [
        abs_check("CCF rows", len(design), 538, 0),
        abs_check("factorial rows", counts.get("factorial", 0), 512, 0),
        abs_check("centre rows", counts.get("center", 0), 8, 0),
        abs_check("axial face rows", counts.get("axial_face", 0), 18, 0),
        abs_check("rows after deduplication", len(deduplicate(design)), 531, 0),
    ]


def crit_intercepts(ctx: Context) -> list[Check]:
    out = []
    for mid, expected in REFERENCE_INTERCEPTS.items():
        m = ctx.model(mid)
        out.append(abs_check(f"intercept {mid}", m.evaluate(np.zeros(m.n_vars)), expected, 1e-9))
    return out


def crit_effects(ctx: Context) -> list[Check]:
    model = ctx.model("prp300.sigma_front")
    data = evaluate_design(full_factorial(model.variable_labels), BuiltinEvaluator((model,)))
    table = compute_effects(data, model.response_name)
    by_name = {e.name: e for e in table}
    out = [rel_check(f"effect {lab}", by_name[lab].sigma, sigma, 0.02) for lab, sigma, _ in FRONT_STRESS_EFFECTS]
    expected_order = [lab for lab, _, _ in FRONT_STRESS_EFFECTS]
    out.append(Check("Pareto order", " ".join(table.order), " ".join(expected_order), "exact",
                     table.order == expected_order))
    flags = ["Y" if e.significant else "N" for e in table]
    expected_flags = ["Y" if pct >= 10 else "N" for _, _, pct in FRONT_STRESS_EFFECTS]
    out.append(Check("significance flags", "".join(flags), "".join(expected_flags), "exact", flags == expected_flags))
    return out


def crit_fit_closure(ctx: Context) -> list[Check]:
    out = []
    for mid in PUBLISHED_MODEL_IDS:
        m = ctx.model(mid)
        space = load_space(m.metadata.get("space", "prp300" if mid.startswith("prp300") else "prosib40"))
        data = evaluate_design(deduplicate(ccf(space, 8)), BuiltinEvaluator((m,)))
        refit = fit(data, m.response_name, m.terms)
        err = float(np.max(np.abs(refit.coefficients - m.coefficients)))
        out.append(abs_check(f"{mid} max coefficient error", err, 0.0, 1e-6))
        out.append(abs_check(f"{mid} mean residual", refit.mean_residual, 0.0, 1e-9))
    return out


def _free_and_lower_checks(space, result, expected: Mapping[str, float], prefix: str) -> list[Check]:
    out = []
    phys = result.physical_opt
    for name, value in expected.items():
        out.append(abs_check(f"{prefix} {name} [mm]", phys[name], value, _range_tol(space, name)))
    return out


def crit_prp300_sf12(ctx: Context) -> list[Check]:
    problem, r = ctx.solve("prp300_default")
    space = problem.space
    out = [Check("converged", str(r.converged), "True", "flag", r.converged)]
    out.append(rel_check("FW+RW mass [kg]", r.objective_value, SF12_OPTIMUM["mass"], 0.005))
    out += _free_and_lower_checks(space, r, {k: SF12_OPTIMUM[k] for k in ("t_sk_FB", "t_sk_FT", "t_st_F")}, "optimum")
    others = [v for v in space.variables if v.name not in ("t_sk_FB", "t_sk_FT", "t_st_F")]
    at_lower = [v.label for v in others if abs(r.x_opt[space.index(v.label)] + 1.0) <= 1e-6]
    out.append(Check("remaining six at lower bound", len(at_lower), 6, "exact", len(at_lower) == 6))
    for cname, limit in (("sigma_front", 287.5), ("tip_deflection", 1800.0)):
        cv = r.constraint_values[cname]
        rel = cv["relative_margin"]
        out.append(Check(f"{cname} margin", float(rel), "[0, 1%)", "active", -1e-6 <= rel < 0.01))
    out.append(abs_check("tip deflection [mm]", r.constraint_values["tip_deflection"]["value"],
                         SF12_OPTIMUM["tip_deflection"], 5.0))
    return out


def crit_prp300_sf15(ctx: Context) -> list[Check]:
    problem, r = ctx.solve("prp300_sf15")
    out = [Check("converged", str(r.converged), "True", "flag", r.converged)]
    out.append(rel_check("FW+RW mass [kg]", r.objective_value, SF15_OPTIMUM["mass"], 0.005))
    out += _free_and_lower_checks(problem.space, r, {k: SF15_OPTIMUM[k] for k in ("t_sk_FT", "t_sk_FB")}, "optimum")
    return out


def crit_mass_report(ctx: Context) -> list[Check]:
    _, r = ctx.solve("prp300_default")
    data = builtin_problem("prp300_default")
    ref = data["reference"]
    rep = mass_report(r, data["fixed_masses"], ref["box_wing_total"],
                      {k: v for k, v in ref.items() if k != "box_wing_total"})
    return [
        rel_check("box-wing total [kg]", rep.total, MASS_REPORT["total"], 0.005),
        abs_check("saving [%]", 100 * rep.saving_fraction, MASS_REPORT["saving_percent"], 0.5),
    ]


def crit_prosib(ctx: Context) -> list[Check]:
    """Passes when any of the candidate deflection limits reproduces the optimum."""
    rows, any_ok = [], False
    for lim in PROSIB_DEFLECTION_LIMITS:
        _, r = ctx.solve("prosib_default", deflection_limit_mm=lim)
        sub = [
            rel_check(f"[u_max {lim:g} mm] FW+RW mass [kg]", r.objective_value, PROSIB_OPTIMUM["mass"], 0.01),
            abs_check(f"[u_max {lim:g} mm] front stress [MPa]",
                      r.constraint_values["sigma_front"]["value"], PROSIB_OPTIMUM["stress"], 2.0),
            abs_check(f"[u_max {lim:g} mm] rear stress [MPa]",
                      r.constraint_values["sigma_rear"]["value"], PROSIB_OPTIMUM["stress"], 2.0),
        ]
        any_ok |= all(c.passed for c in sub)
        rows += [Check(c.name, c.computed, c.expected, c.tolerance, c.passed, informative=True) for c in sub]
    rows.append(Check("some deflection limit reproduces the optimum", str(any_ok), "True", "any", any_ok))
    return rows


def crit_jemitola(ctx: Context) -> list[Check]:
    out = []
    for name, expected in JEMITOLA.items():
        wing = WingDescription.from_dict(builtin_wing(name)["wing"])
        out.append(rel_check(f"{name} wing mass [kg]", jemitola_wing_mass(wing), expected, 0.02))
    wing = WingDescription.from_dict(builtin_wing("prp300_front")["wing"])
    doubled = WingDescription(**{**wing.to_dict(), "load_factor_nz": 2 * wing.load_factor_nz})
    ratio = jemitola_wing_mass(doubled) / jemitola_wing_mass(wing)
    out.append(abs_check("M(2 n_z)/M(n_z)", ratio, 2**0.27, 1e-10))
    return out


def _grid_best(problem: SizingProblem, axes, free, chunk: int):
    mesh = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    base = np.where(problem.lower < problem.upper, 0.0, problem.lower)
    best_x, best_f = None, np.inf
    for start in range(0, len(mesh), chunk):
        pts = np.tile(base, (min(chunk, len(mesh) - start), 1))
        pts[:, free] = mesh[start:start + chunk]
        ok = np.ones(len(pts), dtype=bool)
        for c in problem.constraints:
            ok &= c.model.evaluate(pts) <= c.limit
        if not ok.any():
            continue
        f = np.where(ok, problem.objective.evaluate(pts), np.inf)
        k = int(np.argmin(f))
        if f[k] < best_f:
            best_f, best_x = float(f[k]), pts[k].copy()
    return best_x, best_f


def grid_search(problem: SizingProblem, step: float = 1e-3, refine: int = 0,
                chunk: int = 200_000) -> tuple[np.ndarray, float]:
    """Exhaustive feasible minimum over the free variables (at most two).

    With ``refine > 0`` the search zooms ``refine`` times, each pass using a
    grid 10x finer on a window of +/- 30 previous steps around the best point.
    """
    free = np.flatnonzero(problem.lower < problem.upper)
    if len(free) > 2:
        raise ValueError("grid search is limited to two free variables")
    lo, hi = problem.lower[free], problem.upper[free]
    axes = [np.round(np.arange(a, b + step / 2, step), 12) for a, b in zip(lo, hi)]
    best_x, best_f = _grid_best(problem, axes, free, chunk)
    if best_x is None:
        raise ValueError("no feasible grid point")
    for _ in range(refine):
        centre, window, step = best_x[free], 30 * step, step / 10
        axes = [np.clip(np.arange(c - window, c + window + step / 2, step), a, b)
                for c, a, b in zip(centre, lo, hi)]
        x, f = _grid_best(problem, axes, free, chunk)
        if x is not None and f <= best_f:
            best_x, best_f = x, f
    return best_x, best_f


def two_variable_problem(ctx: Context, free=("x1", "x2"), fill: float = -1.0) -> SizingProblem:
    problem, _, _ = ctx.problem("prp300_default")
    lower = np.full(problem.objective.n_vars, fill)
    upper = lower.copy()
    for lab in free:
        j = problem.labels.index(lab)
        lower[j], upper[j] = -1.0, 1.0
    return SizingProblem(problem.objective, problem.stress_constraints, problem.deflection_constraint,
                         lower, upper, problem.space)


def crit_properties(ctx: Context) -> list[Check]:
    rng = np.random.default_rng(ctx.seed)
    out = []

    worst = 0.0
    for sid in ("prp300", "prosib40"):
        space = load_space(sid)
        for v in space.variables:
            xs = rng.uniform(-1, 1, 200)
            back = np.array([codify(decode(x, v), v) for x in xs])
            worst = max(worst, float(np.max(np.abs(back - xs))))
    out.append(abs_check("codify/decode round trip", worst, 0.0, 1e-12))

    h = 1e-6
    for mid in PUBLISHED_MODEL_IDS:
        m = ctx.model(mid)
        pts = rng.uniform(-1, 1, (100, m.n_vars))
        g = m.gradient(pts)
        fd = np.empty_like(g)
        for j in range(m.n_vars):
            e = np.zeros(m.n_vars)
            e[j] = h
            fd[:, j] = (m.evaluate(pts + e) - m.evaluate(pts - e)) / (2 * h)
        err = float(np.max(np.abs(g - fd)) / max(1.0, float(np.max(np.abs(g)))))
        out.append(abs_check(f"{mid} gradient vs finite differences", err, 0.0, 1e-5))

    for name, kw in (("prp300_default", {}), ("prp300_sf15", {})) + tuple(
            ("prosib_default", {"deflection_limit_mm": lim}) for lim in PROSIB_DEFLECTION_LIMITS):
        _, r = ctx.solve(name, **kw)
        tag = name + "".join(f" {k}={v:g}" for k, v in kw.items())
        if r.converged:
            out.append(abs_check(f"KKT residual {tag}", r.kkt_residual, 0.0, 1e-5))
        else:
            out.append(Check(f"KKT residual {tag}", "not converged", "converged", "flag", False))

    problem = two_variable_problem(ctx)
    r = solve(problem)
    gx, gf = grid_search(problem)
    out.append(rel_check("2-variable solver vs grid objective", r.objective_value, gf, 0.001))

    labels = ("x1", "x2", "x3")
    quad = {"x1": 1.7, "x2": -0.4, "x3": 2.25}
    model = PolynomialSurrogate(
        "sigma_F_MPa", "MPa", labels, 50.0,
        (term("x1", coefficient=3.0), term("x1", "x2", coefficient=-1.5))
        + tuple(term(k, k, coefficient=v) for k, v in quad.items()))
    data = evaluate_design(ccf(labels, 3), BuiltinEvaluator((model,)))
    cc = curvature_check(data, "sigma_F_MPa")
    out.append(abs_check("curvature delta vs pure-quadratic sum", cc.delta, abs(sum(quad.values())), 1e-9))
    return out


CRITERIA = (
    Criterion(1, "design", "Design accounting (CCF 538 -> 531 rows)", crit_design),
    Criterion(2, "intercepts", "Centroid intercepts of the embedded models", crit_intercepts),
    Criterion(3, "effects", "Front-stress main effects, order and significance", crit_effects),
    Criterion(4, "fit", "Fit closure on oracle CCF data", crit_fit_closure),
    Criterion(5, "prp300", "PrP-300 optimum, SF 1.2", crit_prp300_sf12),
    Criterion(6, "prp300", "PrP-300 optimum, SF 1.5", crit_prp300_sf15),
    Criterion(7, "mass", "Mass report and saving", crit_mass_report),
    Criterion(8, "prosib", "PROSIB optimum, SF 1.5", crit_prosib),
    Criterion(9, "jemitola", "Empirical wing mass", crit_jemitola),
    Criterion(10, "properties", "Property checks", crit_properties),
)


def select(filter_text: str | None = None) -> list[Criterion]:
    """Criteria whose number, key or title contains ``filter_text`` (case-insensitive)."""
    if not filter_text:
        return list(CRITERIA)
    f = filter_text.lower()
    return [c for c in CRITERIA if f == str(c.number) or f in c.key or f in c.title.lower()]


def run_criterion(criterion: Criterion, ctx: Context) -> CriterionResult:
    try:
        checks = criterion.run(ctx)
    except Exception as exc:  # a crash is a failed check, reported by name
        checks = [Check("error", f"{type(exc).__name__}: {exc}", "no error", "-", False)]
    return CriterionResult(criterion, checks)


def run_all(filter_text: str | None = None, models: Mapping[str, PolynomialSurrogate] | None = None,
            seed: int = 0) -> list[CriterionResult]:
    ctx = Context(dict(models or {}), seed)
    return [run_criterion(c, ctx) for c in select(filter_text)]


def format_report(results: list[CriterionResult], verbose: bool = True) -> str:
    lines = []
    for res in results:
        c = res.criterion
        lines.append(f"{'PASS' if res.passed else 'FAIL'} criterion {c.number} [{c.key}] {c.title}")
        if verbose or not res.passed:
            lines.extend(chk.line() for chk in res.checks)
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} criteria passed")
    return "\n".join(lines)


def report_dict(results: list[CriterionResult]) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "criteria": [
            {
                "number": r.criterion.number,
                "key": r.criterion.key,
                "title": r.criterion.title,
                "passed": r.passed,
                "checks": [
                    {"name": c.name, "computed": c.computed, "expected": c.expected,
                     "tolerance": c.tolerance, "passed": c.passed}
                    for c in r.checks
                ],
            }
            for r in results
        ],
    }


def load_model_overrides(directory: str | Path) -> dict[str, PolynomialSurrogate]:
    """Model files named ``<id>.json`` in ``directory`` replace the embedded ones."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"model directory not found: {directory}")
    out = {}
    for mid in PUBLISHED_MODEL_IDS:
        p = directory / f"{mid}.json"
        if p.is_file():
            m = load_model_file(p)
            out[mid] = PolynomialSurrogate(m.response_name, m.unit, m.variable_labels, m.intercept, m.terms,
                                           m.residual_std, m.mean_residual, {**m.metadata, "id": mid})
    return out
