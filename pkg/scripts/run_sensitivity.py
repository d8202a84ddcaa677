"""Factorial screening of the embedded responses of one configuration: Pareto order of the main effects."""

import argparse

from boxwing_doe import BuiltinEvaluator, compute_effects, evaluate_design, full_factorial, load_space
from boxwing_doe.published_models import PUBLISHED_MODEL_IDS

SPACES = {"prp300": "prp300", "prosib": "prosib40"}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", choices=sorted(SPACES), default="prp300")
    ap.add_argument("--max-order", type=int, default=1)
    ap.add_argument("--top", type=int, default=6)
    args = ap.parse_args()

    space = load_space(SPACES[args.family])
    design = full_factorial(space)
    ids = [m for m in PUBLISHED_MODEL_IDS if m.startswith(args.family + ".")]
    data = evaluate_design(design, BuiltinEvaluator(tuple(ids)))
    for name in data.responses:
        table = compute_effects(data, name, args.max_order)
        print(f"{name}  ({len(design)} runs)")
        for e in list(table)[: args.top]:
            flag = "*" if e.significant else " "
            print(f"  {flag} {e.name:14s} sigma={e.sigma:12.4f}  {100 * e.normalized:6.1f}%")


if __name__ == "__main__":
    main()
