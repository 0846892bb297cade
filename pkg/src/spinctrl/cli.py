"""Command line experiment runner.

Subcommands:
    run          execute a YAML run config (GPM or GA)
    preset       run a shipped experiment (``--list`` shows names)
    validate     check a config without running it
    noise-study  Monte Carlo noise ladder for a configured or completed run
    compare      aggregate run directories into one comparison CSV

Every optimization run writes a timestamped directory with ``summary.json``,
``iterations.csv``, ``control_trajectory.csv``, ``populations.csv``.  The
default output root is ``./runs``, overridable with ``--output-root`` or the
``SPINCTRL_RUNS_DIR`` environment variable.  ``--set a.b.c=value`` overrides
any config key from the command line.
"""

from __future__ import annotations

import argparse
import glob
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from .config import (
    apply_overrides,
    build_ga_parts,
    build_gpm_config,
    build_initial_control,
    build_model,
    build_noise_config,
    build_objective,
    load_config,
    parse_config_text,
    validate_config,
)
from .controls import PConstControl, SinClassParams, rescale_free_time, sample_sin_class
from .errors import ConfigError, SpinCtrlError
from .ga import run_ga_multi_seed
from .gpm import run_gpm
from .model import ChainModel
from .noise import NoiseStudyConfig, noise_study
from .objectives import node_infidelities
from .propagator import CauchyCounter, propagate_forward
from . import runio
from .runio import (
    create_run_dir,
    default_output_root,
    read_csv_columns,
    read_summary,
    write_control_trajectory,
    write_csv,
    write_ga_iterations,
    write_ga_seeds,
    write_gpm_iterations,
    write_noise_samples,
    write_noise_stats,
    write_populations,
    write_summary,
)

__all__ = ["main", "preset_names", "preset_text"]


def preset_names() -> list[str]:
    root = resources.files("spinctrl") / "presets"
    return sorted(p.name[: -len(".yaml")] for p in root.iterdir() if p.name.endswith(".yaml"))


def preset_text(name: str) -> str:
    path = resources.files("spinctrl") / "presets" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path.read_text()


# ---------------------------------------------------------------------------
# run execution


def _population_diagnostics(model: ChainModel, sweep, t_scale: float) -> dict:
    f_nodes = node_infidelities(sweep.nodes, model.psig)
    t_nodes = t_scale * model.grid.nodes
    return {
        "terminal_infidelity": float(f_nodes[-1]),
        "integral_infidelity": float(np.trapezoid(f_nodes, x=t_nodes)),
        "max_node_infidelity": float(np.max(f_nodes[1:])),
    }


def _execute_gpm(ncfg: dict, model: ChainModel, run_dir: Path, name: str) -> dict:
    control0 = build_initial_control(ncfg, model)
    objective = build_objective(ncfg)
    gpm_cfg = build_gpm_config(ncfg)
    counter = CauchyCounter()
    record = run_gpm(model, objective, control0, gpm_cfg, counter=counter)

    write_gpm_iterations(run_dir, record)
    final_values = record.final_control.values
    write_control_trajectory(run_dir, model, final_values)
    sweep = propagate_forward(model, final_values)
    write_populations(run_dir, model, sweep)

    last = record.iterations[-1]
    result = {
        "status": record.status,
        "stop_rule": record.stop_rule,
        "n_iterations": record.n_iterations,
        "final_value": record.final_value,
        "terms": last.terms,
        "final_residual": record.final_residual,
        "final_residual_rel": record.final_residual_rel,
        "cauchy_optimization": record.cauchy_optimization,
        "cauchy_diagnostics": record.cauchy_diagnostics,
        "t_scale": 1.0,
    }
    write_summary(run_dir, {
        "name": name, "kind": "gpm", "wall_time_s": record.wall_time_s,
        "config": ncfg, "result": result,
    })
    return result


def _execute_ga(ncfg: dict, model: ChainModel, run_dir: Path, name: str) -> dict:
    objective, bounds, ga_cfg, n_seeds, milestones, mode = build_ga_parts(ncfg, model)
    counter = CauchyCounter()
    t0 = time.perf_counter()
    result = run_ga_multi_seed(objective, bounds, ga_cfg, n_seeds,
                               milestone_thresholds=milestones, counter=counter)
    wall = time.perf_counter() - t0
    best = result.best_record
    m_sin = ncfg["optimizer"]["ga"]["m_sin"]

    if mode == "keeping_class":
        params = SinClassParams.from_vector(best.best_x, m_sin)
        control = sample_sin_class(params, model)
        t_scale = 1.0
    else:
        params = SinClassParams.from_vector(best.best_x, m_sin, with_time=True)
        t_scale, control = rescale_free_time(params, model.grid, model.envelopes)

    write_ga_iterations(run_dir, best)
    write_ga_seeds(run_dir, result)
    write_control_trajectory(run_dir, model, control.values, t_scale)
    sweep = propagate_forward(model, control.values, scale=t_scale)
    write_populations(run_dir, model, sweep, t_scale)

    payload = {
        "mode": mode,
        "best_value": result.best_value,
        "best_seed": best.rng_seed,
        "best_x": [float(x) for x in best.best_x],
        "milestones": {str(th): count for th, count in best.milestones.items()},
        "total_evaluations": result.total_evaluations,
        "per_seed": [
            {"seed": r.rng_seed, "best_value": r.best_value, "evaluations": r.evaluations,
             "milestones": {str(th): count for th, count in r.milestones.items()}}
            for r in result.records
        ],
        "diagnostics": _population_diagnostics(model, sweep, t_scale),
        "t_scale": t_scale,
    }
    write_summary(run_dir, {
        "name": name, "kind": "ga", "wall_time_s": wall,
        "config": ncfg, "result": payload,
    })
    return payload


def _execute(ncfg: dict, name: str, output_root: Path) -> Path:
    model = build_model(ncfg)
    run_dir = create_run_dir(output_root, name)
    if "gpm" in ncfg["optimizer"]:
        result = _execute_gpm(ncfg, model, run_dir, name)
        print(f"{name}: {result['status']} after {result['n_iterations']} iterations, "
              f"objective {result['final_value']:.6g}, "
              f"complexity {result['cauchy_optimization']} Cauchy problems")
    else:
        result = _execute_ga(ncfg, model, run_dir, name)
        print(f"{name}: best objective {result['best_value']:.6g} "
              f"(seed {result['best_seed']}) in {result['total_evaluations']} evaluations")
    print(f"artifacts: {run_dir}")
    return run_dir


def _resolve_output_root(args) -> Path:
    if args.output_root is not None:
        return Path(args.output_root)
    return default_output_root()


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_run(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set)
    ncfg = validate_config(cfg)
    name = args.name or ncfg.get("name") or Path(args.config).stem
    _execute(ncfg, name, _resolve_output_root(args))
    return 0


def _cmd_preset(args) -> int:
    if args.list or args.name is None:
        for name in preset_names():
            print(name)
        return 0
    text = preset_text(args.name)
    if args.dump:
        sys.stdout.write(text)
        return 0
    cfg = apply_overrides(parse_config_text(text, source=f"preset {args.name}"), args.set)
    ncfg = validate_config(cfg)
    _execute(ncfg, ncfg.get("name", args.name), _resolve_output_root(args))
    return 0


def _cmd_validate(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set)
    ncfg = validate_config(cfg)
    model = build_model(ncfg)
    parts = []
    if "gpm" in ncfg["optimizer"]:
        control0 = build_initial_control(ncfg, model)
        build_objective(ncfg)
        build_gpm_config(ncfg)
        if not control0.feasible(model.envelopes):
            raise ConfigError("control: initial control violates the envelope bounds")
        parts.append(f"gpm-{ncfg['optimizer']['gpm']['form']}")
    else:
        build_ga_parts(ncfg, model)
        parts.append(f"ga-{ncfg['optimizer']['ga']['mode']}")
    if "noise" in ncfg:
        build_noise_config(ncfg)
        parts.append("noise")
    print(f"OK: {args.config} ({', '.join(parts)}, "
          f"N={model.n_levels}, M={model.n_intervals})")
    return 0


def _cmd_noise_study(args) -> int:
    if (args.config is None) == (args.from_run is None):
        raise ConfigError("noise-study needs exactly one of --config or --from-run")
    t0 = time.perf_counter()
    if args.from_run is not None:
        summary = read_summary(args.from_run)
        raw_cfg = apply_overrides(summary["config"], args.set)
        ncfg = validate_config(raw_cfg)
        model = build_model(ncfg)
        cols = read_csv_columns(Path(args.from_run) / runio.CONTROL_FILE)
        base = PConstControl(np.vstack([cols["u_1"], cols["u_2"]]))
        inherited_scale = float(summary.get("result", {}).get("t_scale", 1.0))
        source = str(args.from_run)
        name = args.name or f"noise-{summary.get('name', 'run')}"
    else:
        cfg = apply_overrides(load_config(args.config), args.set)
        ncfg = validate_config(cfg)
        model = build_model(ncfg)
        base = build_initial_control(ncfg, model)
        inherited_scale = 1.0
        source = None
        name = args.name or f"noise-{ncfg.get('name', Path(args.config).stem)}"

    if "noise" in ncfg:
        noise_cfg = build_noise_config(ncfg)
        t_scale = ncfg["noise"]["t_scale"] or inherited_scale
    else:
        noise_cfg = NoiseStudyConfig(rng_seed=ncfg["rng_seed"])
        t_scale = inherited_scale

    counter = CauchyCounter()
    result = noise_study(model, base, t_scale, noise_cfg, counter=counter)
    run_dir = create_run_dir(_resolve_output_root(args), name)
    write_noise_stats(run_dir, result)
    if args.samples:
        write_noise_samples(run_dir, result)
    write_summary(run_dir, {
        "name": name, "kind": "noise", "wall_time_s": time.perf_counter() - t0,
        "config": ncfg,
        "result": {
            "baseline_w": result.baseline_w,
            "t_scale": t_scale,
            "source_run": source,
            "runs_per_sigma": noise_cfg.runs_per_sigma,
            "total_runs": counter.count,
            "stats": [
                {"sigma": s.sigma, "min_Y": s.min_y, "max_Y": s.max_y,
                 "min_W": s.min_w, "max_W": s.max_w,
                 "mean_W": s.mean_w, "median_W": s.median_w}
                for s in result.stats
            ],
        },
    })
    header = " ".join(f"{c:>10}" for c in ("sigma", "mean_W", "median_W", "max_W"))
    print(header)
    for s in result.stats:
        print(f"{s.sigma:>10.4g} {s.mean_w:>10.4g} {s.median_w:>10.4g} {s.max_w:>10.4g}")
    print(f"artifacts: {run_dir}")
    return 0


def _compare_row(run_dir: str, summary: dict) -> list:
    kind = summary.get("kind")
    result = summary.get("result", {})
    if kind == "gpm":
        gc = summary["config"]["optimizer"]["gpm"]
        label = f"GPM-{gc['form']}"
        terms = result.get("terms", {})
        return [run_dir, label, result.get("cauchy_optimization"),
                result.get("final_value"), terms.get("terminal_infidelity"),
                terms.get("integral_infidelity"), terms.get("max_node_infidelity")]
    if kind == "ga":
        label = f"GA-{result.get('mode', '?')}"
        diag = result.get("diagnostics", {})
        return [run_dir, label, result.get("total_evaluations"),
                result.get("best_value"), diag.get("terminal_infidelity"),
                diag.get("integral_infidelity"), diag.get("max_node_infidelity")]
    if kind == "noise":
        return [run_dir, "noise-study", result.get("total_runs"),
                result.get("baseline_w"), None, None, None]
    raise ConfigError(f"{run_dir}: unrecognized summary kind {kind!r}")


def _cmd_compare(args) -> int:
    dirs: list[str] = []
    for pattern in args.runs:
        matches = sorted(glob.glob(pattern))
        if matches:
            dirs.extend(matches)
        elif Path(pattern).is_dir():
            dirs.append(pattern)
        else:
            raise ConfigError(f"no run directory matches {pattern!r}")
    header = ["run", "label", "complexity", "objective",
              "terminal_infidelity", "integral_infidelity", "max_node_infidelity"]
    rows = [_compare_row(d, read_summary(d)) for d in dirs]
    if args.output:
        write_csv(args.output, header, rows)
        print(f"wrote {args.output} ({len(rows)} run(s))")
    else:
        print(",".join(header))
        for row in rows:
            print(",".join("" if x is None else str(x) for x in row))
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. optimizer.gpm.max_iters=50")
    parser.add_argument("--output-root", default=None,
                        help="directory that receives run directories "
                             f"(default ${runio.DEFAULT_OUTPUT_ROOT_ENV} or ./runs)")
    parser.add_argument("--name", default=None, help="override the run label")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinctrl",
        description="Optimal control experiments on spin chains: "
                    "gradient and genetic optimizers, noise studies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a YAML run config")
    p_run.add_argument("--config", required=True, help="path to the run config")
    _add_common(p_run)
    p_run.set_defaults(handler=_cmd_run)

    p_preset = sub.add_parser("preset", help="run a shipped experiment preset")
    p_preset.add_argument("name", nargs="?", help="preset name (omit to list)")
    p_preset.add_argument("--list", action="store_true", help="list available presets")
    p_preset.add_argument("--dump", action="store_true",
                          help="print the preset config instead of running it")
    _add_common(p_preset)
    p_preset.set_defaults(handler=_cmd_preset)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_val.set_defaults(handler=_cmd_validate)

    p_noise = sub.add_parser("noise-study", help="Monte Carlo control-noise ladder")
    p_noise.add_argument("--config", default=None,
                         help="config with model + control (+ noise) sections")
    p_noise.add_argument("--from-run", default=None,
                         help="run directory whose final control is studied")
    p_noise.add_argument("--samples", action="store_true",
                         help="also dump every per-run W value")
    _add_common(p_noise)
    p_noise.set_defaults(handler=_cmd_noise_study)

    p_cmp = sub.add_parser("compare", help="aggregate run directories into a CSV table")
    p_cmp.add_argument("runs", nargs="+", help="run directories or glob patterns")
    p_cmp.add_argument("-o", "--output", default=None, help="output CSV path")
    p_cmp.set_defaults(handler=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except SpinCtrlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
