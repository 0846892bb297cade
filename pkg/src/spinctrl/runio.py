"""Run-directory persistence: summary documents and plot-ready CSV artifacts.

Every optimization run owns a fresh timestamped directory holding four files:
``summary.json`` (final value and breakdown, complexity ledger, wall time,
config echo, code version), ``iterations.csv``, ``control_trajectory.csv``
(interval midpoints, both controls, the envelope traced with both signs), and
``populations.csv`` (node times, level occupations).  Noise studies write a
summary plus a statistics CSV instead.  Directories are never reused; a name
collision gets a numeric suffix.  Floats are serialized with 17 significant
digits so rereading a CSV reproduces the exact binary values.
"""

from __future__ import annotations

import csv
import json
import os
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InputError
from .ga import GaRunRecord, MultiSeedGaResult
from .gpm import GpmRunRecord
from .model import ChainModel
from .noise import CSV_COLUMNS, NoiseStudyResult
from .propagator import ForwardSweep

__all__ = [
    "DEFAULT_OUTPUT_ROOT_ENV",
    "format_float",
    "create_run_dir",
    "write_csv",
    "read_csv_columns",
    "write_summary",
    "read_summary",
    "write_gpm_iterations",
    "write_ga_iterations",
    "write_ga_seeds",
    "write_control_trajectory",
    "write_populations",
    "write_noise_stats",
    "write_noise_samples",
]

DEFAULT_OUTPUT_ROOT_ENV = "SPINCTRL_RUNS_DIR"

SUMMARY_FILE = "summary.json"
ITERATIONS_FILE = "iterations.csv"
CONTROL_FILE = "control_trajectory.csv"
POPULATIONS_FILE = "populations.csv"
NOISE_STATS_FILE = "noise_stats.csv"
NOISE_SAMPLES_FILE = "noise_samples.csv"


def format_float(x) -> str:
    """17 significant digits: enough to reproduce any float64 bit-exactly."""
    return format(float(x), ".16e")


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format_float(x)
    return str(x)


def default_output_root() -> Path:
    return Path(os.environ.get(DEFAULT_OUTPUT_ROOT_ENV, "runs"))


def create_run_dir(root: Path | str, name: str) -> Path:
    """Make ``root/name-<UTC stamp>`` (suffixed on collision, never overwritten)."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    base = f"{name}-{stamp}"
    for k in range(10000):
        candidate = root / (base if k == 0 else f"{base}-{k}")
        try:
            candidate.mkdir(exist_ok=False)
            return candidate
        except FileExistsError:
            continue
    raise RuntimeError(f"could not allocate a run directory under {root}")


def write_csv(path: Path | str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(x) for x in row])


def read_csv_columns(path: Path | str) -> dict[str, np.ndarray]:
    """Read a numeric CSV back as float arrays keyed by header (blanks -> nan)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty CSV") from None
        cols = [[] for _ in header]
        for row in reader:
            if len(row) != len(header):
                raise InputError(f"{path}: ragged row {row!r}")
            for c, cell in zip(cols, row):
                c.append(float(cell) if cell != "" else np.nan)
    return {h: np.asarray(c, dtype=float) for h, c in zip(header, cols)}


def write_summary(run_dir: Path, payload: dict) -> Path:
    doc = {
        "schema": "spinctrl-run-summary/1",
        "code_version": __version__,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    doc.update(payload)
    path = Path(run_dir) / SUMMARY_FILE
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path


def read_summary(run_dir: Path | str) -> dict:
    path = Path(run_dir) / SUMMARY_FILE
    if not path.is_file():
        raise InputError(f"{run_dir}: no {SUMMARY_FILE} (not a run directory?)")
    with open(path) as fh:
        return json.load(fh)


def write_gpm_iterations(run_dir: Path, record: GpmRunRecord) -> Path:
    term_keys = list(record.iterations[0].terms.keys())
    header = ["k", "value", *term_keys, "residual", "residual_rel", "cauchy_count"]
    rows = [
        [it.k, it.value, *(it.terms[key] for key in term_keys),
         it.residual, it.residual_rel, it.cauchy_count]
        for it in record.iterations
    ]
    path = Path(run_dir) / ITERATIONS_FILE
    write_csv(path, header, rows)
    return path


def write_ga_iterations(run_dir: Path, record: GaRunRecord) -> Path:
    header = ["generation", "best_value", "best_so_far", "evaluations"]
    rows = [[g.generation, g.best_value, g.best_so_far, g.evaluations]
            for g in record.history]
    path = Path(run_dir) / ITERATIONS_FILE
    write_csv(path, header, rows)
    return path


def write_ga_seeds(run_dir: Path, result: MultiSeedGaResult) -> Path:
    header = ["seed", "best_value", "evaluations", "is_best"]
    rows = [[r.rng_seed, r.best_value, r.evaluations, i == result.best_record_index]
            for i, r in enumerate(result.records)]
    path = Path(run_dir) / "ga_seeds.csv"
    write_csv(path, header, rows)
    return path


def write_control_trajectory(
    run_dir: Path, model: ChainModel, values: np.ndarray, t_scale: float = 1.0
) -> Path:
    """Midpoint times (physical, i.e. scaled), both controls, envelope at both signs."""
    t_mid = t_scale * model.grid.midpoints
    nu = model.envelopes
    header = ["t_mid", "u_1", "u_2", "plus_nu_1", "minus_nu_1", "plus_nu_2", "minus_nu_2"]
    rows = [
        [t_mid[j], values[0, j], values[1, j], nu[0, j], -nu[0, j], nu[1, j], -nu[1, j]]
        for j in range(model.n_intervals)
    ]
    path = Path(run_dir) / CONTROL_FILE
    write_csv(path, header, rows)
    return path


def write_populations(
    run_dir: Path, model: ChainModel, sweep: ForwardSweep, t_scale: float = 1.0
) -> Path:
    t_nodes = t_scale * model.grid.nodes
    pops = np.abs(sweep.nodes) ** 2
    header = ["t", *[f"pop_{m}" for m in range(1, model.n_levels + 1)]]
    rows = [[t_nodes[j], *pops[j]] for j in range(len(t_nodes))]
    path = Path(run_dir) / POPULATIONS_FILE
    write_csv(path, header, rows)
    return path


def write_noise_stats(run_dir: Path, result: NoiseStudyResult) -> Path:
    path = Path(run_dir) / NOISE_STATS_FILE
    write_csv(path, list(CSV_COLUMNS), [s.as_row() for s in result.stats])
    return path


def write_noise_samples(run_dir: Path, result: NoiseStudyResult) -> Path:
    header = ["sigma", "run", "W"]
    rows = []
    for sigma in sorted(result.w_samples):
        for run, w in enumerate(result.w_samples[sigma]):
            rows.append([sigma, run, w])
    path = Path(run_dir) / NOISE_SAMPLES_FILE
    write_csv(path, header, rows)
    return path
