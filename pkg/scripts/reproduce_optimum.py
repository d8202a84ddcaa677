"""Solve a built-in sizing problem and print the optimum, the active set and the mass report.

Optional overrides sweep the safety factor or the deflection limit, e.g.
``--safety-factor 1.2 1.5`` or ``--problem prosib_default --deflection 1105 600``.
"""

import argparse

from boxwing_doe import mass_report
from boxwing_doe.validation import Context, builtin_problem


def show(problem, result, data):
    print(f"  mass {result.objective_value:.1f} kg, converged={result.converged}, "
          f"kkt={result.kkt_residual:.1e}, start {result.start_index}")
    for name, v in result.physical_opt.items():
        print(f"    {name:10s} {v:9.3f}")
    for name, c in result.constraint_values.items():
        print(f"    {name:15s} {c['value']:9.2f} / {c['limit']:8.2f}  margin {100 * c['relative_margin']:6.2f}%")
    print(f"    active: {', '.join(result.active_set) or '-'}")
    if result.converged and "fixed_masses" in data:
        ref = data.get("reference", {})
        rep = mass_report(result, data["fixed_masses"], ref.get("box_wing_total"),
                          {k: v for k, v in ref.items() if k in ("oew", "mtow")} or None)
        print(f"    total {rep.total:.1f} kg" + (f", saving {100 * rep.saving_fraction:.2f}%" if rep.saving is not None else ""))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problem", default="prp300_default")
    ap.add_argument("--safety-factor", type=float, nargs="*", default=[])
    ap.add_argument("--deflection", type=float, nargs="*", default=[], help="deflection limits in mm")
    args = ap.parse_args()

    ctx = Context()
    data = builtin_problem(args.problem)
    runs = [{}]
    runs += [{"safety_factor": sf} for sf in args.safety_factor]
    runs += [{"deflection_limit_mm": d} for d in args.deflection]
    for overrides in runs:
        print(f"{args.problem} {overrides or '(as defined)'}")
        problem, result = ctx.solve(args.problem, **overrides)
        show(problem, result, {**data, **overrides})


if __name__ == "__main__":
    main()
