"""Command-line entry point: ``boxwing-doe <command> [options]``.

Exit codes: 0 success, 1 validation failures, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import doe, empirical, ingestion, optimizer, sensitivity, surrogate, validation
from .design_space import BUILTIN_SPACES, load_space
from .published_models import PUBLISHED_MODEL_IDS, ChecksumError

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("boxwing_doe")


class CLIError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _out_path(args, default: str) -> Path:
    path = Path(args.out or default)
    if path.exists() and not args.force:
        raise CLIError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _sidecar(path: Path, args) -> Path:
    side = path.with_name(path.stem + ".summary.json")
    if side.exists() and not args.force:
        raise CLIError(f"{side} exists; pass --force to overwrite")
    return side


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _require_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CLIError(f"file not found: {p}")
    return p


def _space(args):
    return load_space(args.space)


def _model_ids_for(space_id: str) -> list[str]:
    prefix = "prosib." if space_id == "prosib40" else f"{space_id}."
    return [m for m in PUBLISHED_MODEL_IDS if m.startswith(prefix)]


# --------------------------------------------------------------------------
# commands

def cmd_gen_design(args) -> int:
    space = _space(args)
    if args.kind == "factorial":
        design = doe.full_factorial(space)
    else:
        design = doe.ccf(space, center_replicates=args.replicates)
    n_raw = len(design)
    if args.dedup:
        design = doe.deduplicate(design)
    out = _out_path(args, "design.csv")
    side = _sidecar(out, args)
    doe.write_design_csv(design, out)
    summary = {"space": args.space, "kind": args.kind, "rows": len(design), "rows_before_dedup": n_raw,
               "counts": design.counts(), "csv": str(out)}
    _write_json(side, summary)
    print(f"{len(design)} rows written to {out} ({', '.join(f'{k}: {v}' for k, v in design.counts().items())})")
    return EXIT_OK


def _parse_noise(items) -> dict[str, float]:
    out = {}
    for item in items or ():
        name, _, value = item.partition("=")
        try:
            out[name] = float(value)
        except ValueError:
            raise CLIError(f"--noise expects NAME=SIGMA, got {item!r}") from None
    return out


def cmd_evaluate(args) -> int:
    design = doe.read_design_csv(_require_file(args.design))
    if args.external:
        evaluator = ingestion.ExternalCSVEvaluator(_require_file(args.external))
    else:
        models = args.models or _model_ids_for(args.space)
        evaluator = ingestion.BuiltinEvaluator(tuple(models), _parse_noise(args.noise), args.seed)
    data = ingestion.evaluate_design(design, evaluator)
    out = _out_path(args, "dataset.csv")
    side = _sidecar(out, args)
    surrogate.write_dataset_csv(data, out)
    summary = {"rows": len(data), "responses": {k: data.units[k] for k in data.responses}, "csv": str(out)}
    _write_json(side, summary)
    print(f"{len(data)} rows x {len(data.responses)} responses written to {out}")
    return EXIT_OK


def _basis(args, labels):
    kind = args.basis
    if kind == "linear":
        return surrogate.linear_basis(labels)
    if kind == "interaction":
        return surrogate.interaction_basis(labels, args.order)
    if kind == "quadratic":
        return surrogate.quadratic_basis(labels)
    ref = kind.split(":", 1)[1] if kind.startswith("model:") else kind
    if ref in PUBLISHED_MODEL_IDS:
        from .published_models import load_published_model

        return load_published_model(ref).terms
    return surrogate.load_model_file(_require_file(ref)).terms


def cmd_fit(args) -> int:
    data = surrogate.read_dataset_csv(_require_file(args.data))
    model = surrogate.fit(data, args.response, _basis(args, data.design.variable_labels))
    diag = surrogate.residual_diagnostics(model, data)
    out = _out_path(args, "model.json")
    side = _sidecar(out, args)
    surrogate.save_model(model, out)
    summary = {
        "response": args.response,
        "n_rows": len(data),
        "n_terms": model.n_terms,
        "residual_std": diag.residual_std,
        "mean_residual": diag.mean_residual,
        "qq_pairs": diag.qq_pairs,
    }
    try:
        cc = surrogate.curvature_check(data, args.response)
        summary["curvature"] = {"delta": cc.delta, "threshold": cc.threshold, "significant": cc.significant}
    except surrogate.SurrogateError as exc:
        summary["curvature"] = {"skipped": str(exc)}
    _write_json(side, summary)
    print(f"{args.response}: {model.n_terms} coefficients, residual std {diag.residual_std:.6g}, "
          f"mean residual {diag.mean_residual:.3g}; model written to {out}")
    return EXIT_OK


def cmd_effects(args) -> int:
    data = surrogate.read_dataset_csv(_require_file(args.data))
    table = sensitivity.compute_effects(data, args.response, args.max_order, args.threshold)
    out_dir = Path(args.out or "effects")
    if out_dir.exists() and any(out_dir.iterdir()) and not args.force:
        raise CLIError(f"{out_dir} is not empty; pass --force to overwrite")
    paths = sensitivity.write_plot_data(data, args.response, out_dir, table)
    summary = {
        "response": args.response,
        "threshold": args.threshold,
        "effects": [{"factors": e.name, "sigma": e.sigma, "normalized": e.normalized, "significant": e.significant}
                    for e in table],
        "files": {k: str(v) for k, v in paths.items()},
    }
    _write_json(out_dir / "effects.json", summary)
    for e in table:
        log.info("%-12s %10.4f %6.1f%% %s", e.name, e.sigma, 100 * e.normalized, "*" if e.significant else "")
    print(f"Pareto order: {' '.join(table.order)}; significant: {', '.join(e.name for e in table.significant)}")
    print(f"plot data written to {out_dir}")
    return EXIT_OK


def _problem_path(ref: str) -> Path:
    p = Path(ref)
    if p.is_file():
        return p
    from importlib import resources

    name = p.name if p.suffix == ".json" else f"{p.name}.json"
    builtin = resources.files("boxwing_doe.data.problems").joinpath(name)
    if builtin.is_file():
        return Path(str(builtin))
    raise CLIError(f"problem file not found: {ref}")


def cmd_optimize(args) -> int:
    path = _problem_path(args.problem)
    data = json.loads(path.read_text())
    problem, x0, options = optimizer.problem_from_dict(data, path.parent)
    if args.seed is not None:
        options = optimizer.SolverOptions(**{**options.__dict__, "seed": args.seed})
    result = optimizer.solve(problem, x0, options)
    out = _out_path(args, "result.json")
    payload = {"problem": str(path), **result.to_dict()}
    if result.converged and "fixed_masses" in data:
        ref = data.get("reference", {})
        rep = optimizer.mass_report(result, data["fixed_masses"], ref.get("box_wing_total"),
                                    {k: v for k, v in ref.items() if k != "box_wing_total"})
        payload["mass_report"] = rep.to_dict()
    _write_json(out, payload)
    print(f"objective {result.objective_value:.6g} kg, converged {result.converged}, "
          f"active {result.active_set or 'none'}, KKT residual {result.kkt_residual:.2e}")
    if result.physical_opt:
        print("  " + ", ".join(f"{k}={v:.4g}" for k, v in result.physical_opt.items()))
    if "mass_report" in payload:
        rep = payload["mass_report"]
        line = f"  structure total {rep['total']:.6g} kg"
        if rep["saving"] is not None:
            line += f", saving {rep['saving']:.6g} kg ({100 * rep['saving_fraction']:.2f}%)"
        print(line)
    print(f"result written to {out}")
    return EXIT_OK if result.converged else EXIT_NUMERIC


_WING_FLAGS = ("span_b", "area_S", "sweep_quarter_chord", "taper_lambda", "thickness_to_chord",
               "load_factor_nz", "mtom", "dive_speed_VD")


def cmd_jemitola(args) -> int:
    reference = {}
    if args.input:
        wing, reference = empirical.load_wing(_require_file(args.input))
    else:
        values = {k: getattr(args, k) for k in _WING_FLAGS}
        missing = [k for k, v in values.items() if v is None]
        if missing:
            raise CLIError(f"give --input or all wing flags (missing {', '.join('--' + m for m in missing)})")
        wing = empirical.WingDescription(**values)
    mass = empirical.jemitola_wing_mass(wing)
    out = _out_path(args, "jemitola.json")
    _write_json(out, {"input": wing.to_dict(), "wing_mass_kg": mass, "reference": reference})
    print(f"wing mass {mass:.1f} kg" + (f" (reference {reference['mass_kg']:g} kg)" if "mass_kg" in reference else ""))
    return EXIT_OK


def cmd_validate(args) -> int:
    models = validation.load_model_overrides(args.models_dir) if args.models_dir else {}
    if not validation.select(args.filter):
        raise CLIError(f"no criterion matches filter {args.filter!r}")
    results = validation.run_all(args.filter, models, args.seed or 0)
    print(validation.format_report(results, verbose=args.verbose))
    if args.out:
        _write_json(_out_path(args, args.out), validation.report_dict(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", default="prp300",
                        help=f"design space id ({', '.join(BUILTIN_SPACES)}) or JSON file")
    common.add_argument("--out", help="output file (directory for effects)")
    common.add_argument("--seed", type=int, default=None, help="seed for noise and multistart draws")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="boxwing-doe", description="DoE surrogate sizing toolkit for box-wing structures")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-design", parents=[common], help="write a factorial or CCF design CSV")
    p.add_argument("--kind", choices=("factorial", "ccf"), default="ccf")
    p.add_argument("--replicates", type=int, default=1, help="centre-point replicates (ccf)")
    p.add_argument("--dedup", action="store_true", help="drop repeated rows")
    p.set_defaults(func=cmd_gen_design)

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a design with built-in models or join external data")
    p.add_argument("--design", required=True)
    p.add_argument("--models", nargs="+", help="model ids or files (default: every model of --space)")
    p.add_argument("--external", help="external response CSV joined on codified coordinates")
    p.add_argument("--noise", action="append", metavar="NAME=SIGMA", help="Gaussian noise per response")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fit", parents=[common], help="fit a polynomial surrogate")
    p.add_argument("--data", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--basis", default="quadratic",
                   help="linear | interaction | quadratic | model:<id or file> (reuse its term set)")
    p.add_argument("--order", type=int, default=2, help="interaction order for --basis interaction")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("effects", parents=[common], help="factorial effects, Pareto ranking and plot data")
    p.add_argument("--data", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--max-order", type=int, default=1)
    p.add_argument("--threshold", type=float, default=sensitivity.DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_effects)

    p = sub.add_parser("optimize", parents=[common], help="solve a minimum-mass sizing problem")
    p.add_argument("--problem", required=True, help="problem JSON file or built-in problem name")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("jemitola", parents=[common], help="empirical box-wing wing mass")
    p.add_argument("--input", help="wing JSON file")
    for name in _WING_FLAGS:
        p.add_argument(f"--{name}", type=float)
    p.set_defaults(func=cmd_jemitola)

    p = sub.add_parser("validate", parents=[common], help="run the reproduction checks")
    p.add_argument("--filter", help="criterion number, key or title fragment")
    p.add_argument("--models-dir", help="directory of <id>.json files replacing embedded models")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (surrogate.RankDeficientError, optimizer.InfeasibleProblemError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FileNotFoundError, ValueError, KeyError, ChecksumError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
