"""Minimum-mass sizing over the codified design cube.

minimise   mass(x)
subject to stress_i(x) <= sigma_yield / SF      for every stress model
           deflection(x) <= 0.1 * b / 2
           lower <= x <= upper,  within [-1, 1]

Solved with SLSQP on analytic surrogate gradients, from one or several
deterministic starting points. Constraints are normalised by their limits
and the objective by its centroid value so tolerances are scale free.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize, nnls

from .design_space import BUILTIN_SPACES, DesignSpace, codify, load_space
from .published_models import PUBLISHED_MODEL_IDS, load_published_model
from .surrogate import PolynomialSurrogate, load_model_file


class SizingError(ValueError):
    pass


class InfeasibleProblemError(RuntimeError):
    pass


def admissible_stress(yield_strength: float, safety_factor: float) -> float:
    if not (yield_strength > 0 and safety_factor > 0):
        raise SizingError("yield strength and safety factor must be positive")
    return yield_strength / safety_factor


def deflection_limit(wingspan: float) -> float:
    """Tip deflection allowed for geometric linearity: 10 % of the semi-span."""
    if not wingspan > 0:
        raise SizingError("wingspan must be positive")
    return 0.1 * wingspan / 2.0


@dataclass(frozen=True)
class Constraint:
    name: str
    model: PolynomialSurrogate
    limit: float

    def __post_init__(self):
        if not self.limit > 0:
            raise SizingError(f"constraint {self.name}: limit must be positive")

    def normalized(self, x) -> float:
        """model/limit - 1; feasible when <= 0."""
        return self.model.evaluate(x) / self.limit - 1.0


@dataclass(frozen=True)
class SizingProblem:
    objective: PolynomialSurrogate
    stress_constraints: tuple[Constraint, ...]
    deflection_constraint: Constraint | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    space: DesignSpace | None = None

    def __post_init__(self):
        n = self.objective.n_vars
        object.__setattr__(self, "stress_constraints", tuple(self.stress_constraints))
        lo = -np.ones(n) if self.lower is None else np.asarray(self.lower, dtype=float)
        hi = np.ones(n) if self.upper is None else np.asarray(self.upper, dtype=float)
        if lo.shape != (n,) or hi.shape != (n,):
            raise SizingError(f"bounds must have {n} entries")
        if np.any(lo < -1) or np.any(hi > 1):
            raise SizingError("bounds may be tightened but never widened beyond [-1, 1]")
        if np.any(lo > hi):
            raise SizingError("lower bound above upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        labels = self.objective.variable_labels
        for c in self.constraints:
            if c.model.variable_labels != labels:
                raise SizingError(f"constraint {c.name}: variable labels differ from the objective's")
        if self.space is not None and self.space.labels != labels:
            raise SizingError("design space labels differ from the models'")
        names = [c.name for c in self.constraints]
        if len(set(names)) != len(names):
            raise SizingError("constraint names must be unique")

    @property
    def constraints(self) -> tuple[Constraint, ...]:
        extra = (self.deflection_constraint,) if self.deflection_constraint is not None else ()
        return self.stress_constraints + extra

    @property
    def labels(self) -> tuple[str, ...]:
        return self.objective.variable_labels

    def max_violation(self, x) -> float:
        return max((c.normalized(x) for c in self.constraints), default=-np.inf)

    def with_limits(self, stress: float | None = None, deflection: float | None = None) -> "SizingProblem":
        sc = self.stress_constraints
        if stress is not None:
            sc = tuple(Constraint(c.name, c.model, stress) for c in sc)
        dc = self.deflection_constraint
        if deflection is not None and dc is not None:
            dc = Constraint(dc.name, dc.model, deflection)
        return SizingProblem(self.objective, sc, dc, self.lower, self.upper, self.space)


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 500
    ftol: float = 1e-14
    feasibility_tol: float = 1e-6
    kkt_tol: float = 1e-6
    activity_tol: float = 0.01  # report a constraint as active below this relative margin
    multistart: int = 8
    seed: int = 0


@dataclass
class SizingResult:
    x_opt: np.ndarray
    physical_opt: dict[str, float] | None
    objective_value: float
    constraint_values: dict[str, dict[str, float]]
    active_set: list[str]
    converged: bool
    iterations: int
    kkt_residual: float
    multipliers: dict[str, float] = field(default_factory=dict)
    start_index: int = 0
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "x_opt": [float(v) for v in self.x_opt],
            "physical_opt": self.physical_opt,
            "objective_value": self.objective_value,
            "constraint_values": self.constraint_values,
            "active_set": self.active_set,
            "converged": self.converged,
            "iterations": self.iterations,
            "kkt_residual": self.kkt_residual,
            "multipliers": self.multipliers,
            "start_index": self.start_index,
            "message": self.message,
        }


def start_points(problem: SizingProblem, x0=None, count: int = 8, seed: int = 0) -> list[np.ndarray]:
    """Deterministic starts: x0 (or the midpoint clipped to the bounds), midpoint, both cube corners,
    +/-0.5 diagonals and alternating patterns, then seeded uniform draws."""
    n = problem.objective.n_vars
    alt = np.where(np.arange(n) % 2 == 0, 0.5, -0.5)
    fixed = [np.zeros(n), -np.ones(n), np.ones(n), -0.5 * np.ones(n), 0.5 * np.ones(n), alt, -alt]
    first = np.clip(np.zeros(n), problem.lower, problem.upper) if x0 is None else np.asarray(x0, dtype=float)
    if first.shape != (n,):
        raise SizingError(f"x0 must have {n} entries")
    if np.any(first < problem.lower - 1e-12) or np.any(first > problem.upper + 1e-12):
        raise SizingError("x0 lies outside the bounds")
    pts = [first]
    rng = np.random.default_rng(seed)
    candidates = iter(fixed)
    while len(pts) < count:
        p = next(candidates, None)
        if p is None:
            p = rng.uniform(-1, 1, n)
        p = np.clip(p, problem.lower, problem.upper)
        if not any(np.array_equal(p, q) for q in pts):
            pts.append(p)
    return pts


def _kkt(problem: SizingProblem, x, free, scale) -> tuple[float, dict[str, float]]:
    """Relative stationarity residual of the Lagrangian with nonnegative multipliers."""
    gf = problem.objective.gradient(x)[free] / scale
    cols, names = [], []
    for c in problem.constraints:
        if c.normalized(x) > -1e-5:
            cols.append(c.model.gradient(x)[free] / c.limit)
            names.append(c.name)
    for k, j in enumerate(np.flatnonzero(free)):
        e = np.zeros(int(free.sum()))
        if x[j] <= problem.lower[j] + 1e-9:
            e[k] = -1.0
            cols.append(e)
            names.append(f"lower:{problem.labels[j]}")
        elif x[j] >= problem.upper[j] - 1e-9:
            e[k] = 1.0
            cols.append(e)
            names.append(f"upper:{problem.labels[j]}")
    norm = max(float(np.max(np.abs(gf))) if gf.size else 0.0, 1e-12)
    if not cols:
        return float(np.max(np.abs(gf), initial=0.0)) / norm if gf.size else 0.0, {}
    A = np.column_stack(cols)
    lam, _ = nnls(A, -gf)
    r = A @ lam + gf
    return float(np.max(np.abs(r))) / norm, {n: float(v) for n, v in zip(names, lam)}


def _solve_from(problem: SizingProblem, start, options: SolverOptions, scale: float):
    free = problem.lower < problem.upper
    base = np.where(free, 0.0, problem.lower)

    def full(z):
        x = base.copy()
        x[free] = z
        return x

    def fobj(z):
        return problem.objective.evaluate(full(z)) / scale

    def gobj(z):
        return problem.objective.gradient(full(z))[free] / scale

    cons = [
        {
            "type": "ineq",
            "fun": (lambda z, c=c: 1.0 - c.model.evaluate(full(z)) / c.limit),
            "jac": (lambda z, c=c: -c.model.gradient(full(z))[free] / c.limit),
        }
        for c in problem.constraints
    ]
    z0 = np.asarray(start, dtype=float)[free]
    if not free.any():
        x = full(z0)
        return x, 0, True, "all variables fixed"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(
            fobj, z0, jac=gobj, method="SLSQP",
            bounds=list(zip(problem.lower[free], problem.upper[free])),
            constraints=cons,
            options={"maxiter": options.max_iter, "ftol": options.ftol},
        )
    x = np.clip(full(res.x), problem.lower, problem.upper)
    return x, int(res.nit), bool(res.success), str(res.message)


def _result(problem: SizingProblem, x, nit, ok, msg, options, scale, start_index) -> SizingResult:
    free = problem.lower < problem.upper
    kkt, mult = _kkt(problem, x, free, scale)
    cvals = {}
    active = []
    for c in problem.constraints:
        v = c.model.evaluate(x)
        margin = c.limit - v
        cvals[c.name] = {"value": v, "limit": c.limit, "margin": margin, "relative_margin": margin / c.limit}
        if margin / c.limit < options.activity_tol:
            active.append(c.name)
    feasible = problem.max_violation(x) <= options.feasibility_tol
    physical = problem.space.decode_point(x) if problem.space is not None else None
    return SizingResult(
        x_opt=x,
        physical_opt=physical,
        objective_value=problem.objective.evaluate(x),
        constraint_values=cvals,
        active_set=active,
        converged=bool(ok and feasible and kkt <= options.kkt_tol),
        iterations=nit,
        kkt_residual=kkt,
        multipliers=mult,
        start_index=start_index,
        message=msg,
    )


def solve(problem: SizingProblem, x0=None, options: SolverOptions | None = None) -> SizingResult:
    """Best feasible local optimum over the deterministic multistart set.

    Raises :class:`InfeasibleProblemError` when no start reaches a feasible
    point. A feasible but unconverged best iterate is returned with
    ``converged=False``.
    """
    options = options or SolverOptions()
    scale = max(abs(problem.objective.intercept), 1.0)
    best = None
    for k, start in enumerate(start_points(problem, x0, max(options.multistart, 1), options.seed)):
        x, nit, ok, msg = _solve_from(problem, start, options, scale)
        if problem.max_violation(x) > options.feasibility_tol:
            continue
        r = _result(problem, x, nit, ok, msg, options, scale, k)
        if best is None:
            best = r
            continue
        tol = 1e-9 * abs(best.objective_value)
        better = r.objective_value < best.objective_value - tol
        tie = abs(r.objective_value - best.objective_value) <= tol
        if better or (tie and r.converged and not best.converged):
            best = r
    if best is None:
        raise InfeasibleProblemError("no feasible point found from any start")
    return best


# --------------------------------------------------------------------------
# mass bookkeeping

@dataclass(frozen=True)
class MassReport:
    wings_mass: float
    fixed_masses: dict[str, float]
    total: float
    reference_total: float | None = None
    saving: float | None = None
    saving_fraction: float | None = None
    shifted: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "wings_mass": self.wings_mass,
            "fixed_masses": self.fixed_masses,
            "total": self.total,
            "reference_total": self.reference_total,
            "saving": self.saving,
            "saving_fraction": self.saving_fraction,
            "shifted": self.shifted,
        }


def mass_report(result: SizingResult, fixed_masses: Mapping[str, float] | None,
                reference_total: float | None = None,
                reference_masses: Mapping[str, float] | None = None) -> MassReport:
    """Structure total = surrogate wing mass + fixed masses, with the saving against a reference.

    ``reference_masses`` (for example OEW and MTOW of the reference aircraft)
    are shifted down by the saving.
    """
    if not result.converged:
        raise SizingError("mass report needs a converged sizing result")
    if fixed_masses is None:
        raise SizingError("fixed masses are required (pass {} for none)")
    fixed = {k: float(v) for k, v in fixed_masses.items()}
    total = result.objective_value + sum(fixed.values())
    if reference_total is None:
        return MassReport(result.objective_value, fixed, total)
    saving = reference_total - total
    shifted = {k: float(v) - saving for k, v in (reference_masses or {}).items()}
    return MassReport(result.objective_value, fixed, total, reference_total, saving,
                      saving / reference_total, shifted)


# --------------------------------------------------------------------------
# problem files

def _load_model_ref(ref: str, base: Path) -> PolynomialSurrogate:
    if ref in PUBLISHED_MODEL_IDS:
        return load_published_model(ref)
    path = Path(ref)
    if not path.is_absolute():
        path = base / path
    return load_model_file(path)


def _load_space_ref(ref: str, base: Path) -> DesignSpace:
    if ref in BUILTIN_SPACES:
        return load_space(ref)
    path = Path(ref)
    return load_space(path if path.is_absolute() else base / path)


def _codified_from_physical(space: DesignSpace, values: Mapping[str, float]) -> np.ndarray:
    full = {v.name: v.midpoint for v in space.variables}
    for k, val in values.items():
        full[space.variable(k).name] = val
    return space.codify_point(full)


def problem_from_dict(data: Mapping, base: str | Path = ".") -> tuple[SizingProblem, np.ndarray | None, SolverOptions]:
    """Build (problem, x0, options) from a problem-file mapping.

    Model references are embedded ids (``prp300.mass``) or model-file paths
    relative to ``base``. ``bounds`` and ``x0`` are physical values keyed by
    variable name or label; a ``codified_x0`` list may be given instead.
    """
    base = Path(base)
    try:
        objective = _load_model_ref(data["objective"], base)
        space = _load_space_ref(data["space"], base) if "space" in data else None
        if "stress_limit_MPa" in data:
            s_lim = float(data["stress_limit_MPa"])
        else:
            s_lim = admissible_stress(float(data["yield_strength_MPa"]), float(data["safety_factor"]))
        stress = tuple(
            Constraint(c.get("name", c["model"]), _load_model_ref(c["model"], base), float(c.get("limit_MPa", s_lim)))
            for c in data.get("stress_constraints", [])
        )
        defl = None
        if data.get("deflection_constraint"):
            dc = data["deflection_constraint"]
            if "deflection_limit_mm" in data:
                d_lim = float(data["deflection_limit_mm"])
            else:
                d_lim = deflection_limit(float(data["wingspan_mm"]))
            defl = Constraint(dc.get("name", dc["model"]), _load_model_ref(dc["model"], base), d_lim)
    except KeyError as exc:
        raise SizingError(f"problem definition missing field {exc}") from None

    n = objective.n_vars
    lower, upper = -np.ones(n), np.ones(n)
    if data.get("bounds"):
        if space is None:
            raise SizingError("physical bounds need a design space")
        for key, (lo, hi) in data["bounds"].items():
            var = space.variable(key)
            j = space.index(key)
            lower[j], upper[j] = codify(lo, var), codify(hi, var)
    problem = SizingProblem(objective, stress, defl, lower, upper, space)

    x0 = None
    if "codified_x0" in data:
        x0 = np.asarray(data["codified_x0"], dtype=float)
    elif data.get("x0"):
        if space is None:
            raise SizingError("physical x0 needs a design space")
        x0 = _codified_from_physical(space, data["x0"])
    solver = dict(data.get("solver", {}))
    options = SolverOptions(**solver)
    return problem, x0, options


def load_problem(path: str | Path) -> tuple[SizingProblem, np.ndarray | None, SolverOptions]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"problem file not found: {path}")
    return problem_from_dict(json.loads(path.read_text()), path.parent)
