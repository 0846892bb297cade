"""Run configuration: YAML schema, validation with path-precise errors, builders.

A run config is one YAML mapping with sections

    model:      chain size, coupling, horizon/grid, envelopes, bounds, states
    control:    initial control for gradient runs (zero | trapezoid | sin_class | csv)
    objective:  transfer_f1 | keeping_f2 with penalty weights (gradient runs only)
    optimizer:  exactly one of gpm: {...} or ga: {...}
    noise:      sigma ladder for robustness studies (optional)
    rng_seed:   base seed for stochastic components (default 0)
    name:       run label used in the output directory name (optional)

``validate_config`` fills defaults and normalizes values, so the returned
mapping is a complete echo: persisting it and reparsing yields an equivalent
run.  Builders turn a normalized config into the package's domain objects.
"""

from __future__ import annotations

import copy
from pathlib import Path

import numpy as np
import yaml

from .controls import PConstControl, SinClassParams, sample_sin_class, trapezoid_profile_control
from .errors import ConfigError
from .ga import GaConfig
from .gpm import GpmConfig, KeepingPair, ObjectiveBelow, StationarityBelow
from .model import ChainModel, TimeGrid, default_chain_model
from .noise import NoiseStudyConfig
from .objectives import Objective
from .runio import read_csv_columns

__all__ = [
    "load_config",
    "parse_config_text",
    "apply_overrides",
    "validate_config",
    "build_model",
    "build_initial_control",
    "build_objective",
    "build_gpm_config",
    "build_ga_parts",
    "build_noise_config",
]

OPERATOR_CHOICES = ("end_site_projectors",)
CONTROL_KINDS = ("zero", "trapezoid", "sin_class", "csv")
GA_MODES = ("keeping_class", "free_time_transfer")


# ---------------------------------------------------------------------------
# low-level checked getters


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _as_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        _fail(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed: set[str], path: str) -> None:
    unknown = set(node) - allowed
    if unknown:
        _fail(path, f"unknown key(s) {sorted(unknown)}; allowed: {sorted(allowed)}")


def _get_bool(node: dict, key: str, path: str, default: bool) -> bool:
    val = node.get(key, default)
    if not isinstance(val, bool):
        _fail(f"{path}.{key}", f"expected true/false, got {val!r}")
    return val


def _get_int(node, key, path, default=None, minimum=None):
    val = node.get(key, default)
    if val is None:
        _fail(f"{path}.{key}", "required key is missing")
    if isinstance(val, bool) or not isinstance(val, int):
        _fail(f"{path}.{key}", f"expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        _fail(f"{path}.{key}", f"expected >= {minimum}, got {val}")
    return val


def _get_float(node, key, path, default=None, minimum=None, positive=False):
    val = node.get(key, default)
    if val is None:
        _fail(f"{path}.{key}", "required key is missing")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail(f"{path}.{key}", f"expected a number, got {val!r}")
    val = float(val)
    if not np.isfinite(val):
        _fail(f"{path}.{key}", f"expected a finite number, got {val!r}")
    if positive and val <= 0:
        _fail(f"{path}.{key}", f"expected > 0, got {val}")
    if minimum is not None and val < minimum:
        _fail(f"{path}.{key}", f"expected >= {minimum}, got {val}")
    return val


def _get_str(node, key, path, default=None, choices=None):
    val = node.get(key, default)
    if val is None:
        _fail(f"{path}.{key}", "required key is missing")
    if not isinstance(val, str):
        _fail(f"{path}.{key}", f"expected a string, got {val!r}")
    if choices is not None and val not in choices:
        _fail(f"{path}.{key}", f"expected one of {list(choices)}, got {val!r}")
    return val


def _as_float(val, path, minimum=None, positive=False) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail(path, f"expected a number, got {val!r}")
    val = float(val)
    if not np.isfinite(val):
        _fail(path, f"expected a finite number, got {val!r}")
    if positive and val <= 0:
        _fail(path, f"expected > 0, got {val}")
    if minimum is not None and val < minimum:
        _fail(path, f"expected >= {minimum}, got {val}")
    return val


def _get_pair(node, key, path, default=None, minimum=None, positive=False):
    val = node.get(key, default)
    if val is None:
        _fail(f"{path}.{key}", "required key is missing")
    if not isinstance(val, (list, tuple)) or len(val) != 2:
        _fail(f"{path}.{key}", f"expected a pair [x, y], got {val!r}")
    return [_as_float(v, f"{path}.{key}[{i}]", minimum=minimum, positive=positive)
            for i, v in enumerate(val)]


def _get_float_list(node, key, path, default=None, min_len=1, minimum=None):
    val = node.get(key, default)
    if val is None:
        _fail(f"{path}.{key}", "required key is missing")
    if not isinstance(val, (list, tuple)) or len(val) < min_len:
        _fail(f"{path}.{key}", f"expected a list of at least {min_len} number(s), got {val!r}")
    out = []
    for i, v in enumerate(val):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(float(v)):
            _fail(f"{path}.{key}[{i}]", f"expected a finite number, got {v!r}")
        if minimum is not None and float(v) < minimum:
            _fail(f"{path}.{key}[{i}]", f"expected >= {minimum}, got {v}")
        out.append(float(v))
    return out


# ---------------------------------------------------------------------------
# loading and overrides


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), source=str(path))


def parse_config_text(text: str, source: str = "<config>") -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: malformed YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be a mapping of sections")
    return doc


def apply_overrides(cfg: dict, assignments: list[str]) -> dict:
    """Apply ``section.key=value`` overrides; values are parsed as YAML scalars."""
    out = copy.deepcopy(cfg)
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form path.to.key=value")
        dotted, raw = item.split("=", 1)
        keys = [k for k in dotted.strip().split(".") if k]
        if not keys:
            raise ConfigError(f"override {item!r} has an empty key path")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"override {item!r}: bad value: {exc}") from exc
        node = out
        for key in keys[:-1]:
            nxt = node.get(key)
            if nxt is None:
                nxt = node[key] = {}
            elif not isinstance(nxt, dict):
                raise ConfigError(f"override {item!r}: {key!r} is not a section")
            node = nxt
        node[keys[-1]] = value
    return out


# ---------------------------------------------------------------------------
# section validators (each returns the normalized section)


def _validate_model(node) -> dict:
    node = _as_mapping(node, "model")
    _check_keys(node, {
        "n_levels", "coupling", "t_final", "n_intervals", "b_bar", "q",
        "shape_const", "sigma", "operators", "psi0_site", "psig_site", "flat_bounds",
    }, "model")
    n = _get_int(node, "n_levels", "model", minimum=2)
    m = _get_int(node, "n_intervals", "model", minimum=1)
    out = {
        "n_levels": n,
        "coupling": _get_float(node, "coupling", "model", default=1.0),
        "t_final": _get_float(node, "t_final", "model", positive=True),
        "n_intervals": m,
        "b_bar": _get_pair(node, "b_bar", "model", default=[5.0, 5.0], minimum=0.0),
        "q": None,
        "shape_const": _get_pair(node, "shape_const", "model", default=[25.0, 25.0], minimum=0.0),
        "sigma": None,
        "operators": _get_str(node, "operators", "model",
                              default="end_site_projectors", choices=OPERATOR_CHOICES),
        "psi0_site": _get_int(node, "psi0_site", "model", default=1, minimum=1),
        "psig_site": _get_int(node, "psig_site", "model", default=n, minimum=1),
        "flat_bounds": _get_bool(node, "flat_bounds", "model", default=False),
    }
    q = node.get("q", [8, 8])
    if not isinstance(q, (list, tuple)) or len(q) != 2:
        _fail("model.q", f"expected a pair of even integers, got {q!r}")
    for i, v in enumerate(q):
        if isinstance(v, bool) or not isinstance(v, int) or v <= 0 or v % 2:
            _fail(f"model.q[{i}]", f"expected a positive even integer, got {v!r}")
    out["q"] = [int(q[0]), int(q[1])]

    sigma = node.get("sigma", "constant:1")
    if isinstance(sigma, str):
        if not sigma.startswith("constant:"):
            _fail("model.sigma", f"string form must be 'constant:<value>', got {sigma!r}")
        try:
            float(sigma.split(":", 1)[1])
        except ValueError:
            _fail("model.sigma", f"bad constant value in {sigma!r}")
        out["sigma"] = sigma
    elif isinstance(sigma, (int, float)) and not isinstance(sigma, bool):
        out["sigma"] = f"constant:{float(sigma)!r}"
    elif isinstance(sigma, (list, tuple)):
        vals = _get_float_list({"sigma": sigma}, "sigma", "model", min_len=m)
        if len(vals) != m:
            _fail("model.sigma", f"expected {m} values (one per interval), got {len(vals)}")
        out["sigma"] = vals
    else:
        _fail("model.sigma", f"expected 'constant:<x>', a number, or a list, got {sigma!r}")

    for key in ("psi0_site", "psig_site"):
        if out[key] > n:
            _fail(f"model.{key}", f"site index {out[key]} exceeds n_levels={n}")
    return out


def _validate_control(node) -> dict:
    node = _as_mapping(node, "control")
    kind = _get_str(node, "kind", "control", choices=CONTROL_KINDS)
    if kind == "zero":
        _check_keys(node, {"kind"}, "control")
        return {"kind": "zero"}
    if kind == "trapezoid":
        _check_keys(node, {"kind", "knot_fractions", "shoulder_levels", "baselines",
                           "mirrored"}, "control")
        fr = node.get("knot_fractions", [0.1, 0.2, 0.8, 0.9])
        if not isinstance(fr, (list, tuple)) or len(fr) != 4:
            _fail("control.knot_fractions", f"expected four fractions, got {fr!r}")
        fr = [_as_float(v, f"control.knot_fractions[{i}]", minimum=0.0)
              for i, v in enumerate(fr)]
        if not all(a < b for a, b in zip(fr, fr[1:])) or fr[-1] >= 1.0:
            _fail("control.knot_fractions", f"expected 0 < f1 < f2 < f3 < f4 < 1, got {fr}")
        sh = node.get("shoulder_levels", [[-0.2, -0.2], [-0.2, 0.2]])
        if (not isinstance(sh, (list, tuple)) or len(sh) != 2
                or any(not isinstance(p, (list, tuple)) or len(p) != 2 for p in sh)):
            _fail("control.shoulder_levels", f"expected [[L1, R1], [L2, R2]], got {sh!r}")
        sh = [[float(x) for x in pair] for pair in sh]
        return {
            "kind": "trapezoid",
            "knot_fractions": fr,
            "shoulder_levels": sh,
            "baselines": _get_pair(node, "baselines", "control", default=[-0.1, 0.0]),
            "mirrored": _get_bool(node, "mirrored", "control", default=False),
        }
    if kind == "sin_class":
        _check_keys(node, {"kind", "gamma", "omega"}, "control")
        gamma = node.get("gamma")
        omega = node.get("omega")
        for name, val in (("gamma", gamma), ("omega", omega)):
            if (not isinstance(val, (list, tuple)) or len(val) != 2
                    or any(not isinstance(ch, (list, tuple)) for ch in val)):
                _fail(f"control.{name}", "expected two per-channel lists [[...], [...]]")
        n_terms = len(gamma[0])
        if n_terms < 1:
            _fail("control.gamma[0]", "expected at least one term")
        for name, val in (("gamma", gamma), ("omega", omega)):
            for l, ch in enumerate(val):
                if len(ch) != n_terms:
                    _fail(f"control.{name}[{l}]",
                          f"expected {n_terms} values to match gamma[0], got {len(ch)}")
        return {
            "kind": "sin_class",
            "gamma": [[_as_float(x, f"control.gamma[{l}][{i}]")
                       for i, x in enumerate(ch)] for l, ch in enumerate(gamma)],
            "omega": [[_as_float(x, f"control.omega[{l}][{i}]")
                       for i, x in enumerate(ch)] for l, ch in enumerate(omega)],
        }
    # csv
    _check_keys(node, {"kind", "path"}, "control")
    return {"kind": "csv", "path": _get_str(node, "path", "control")}


def _validate_objective(node) -> dict:
    node = _as_mapping(node, "objective")
    _check_keys(node, {"kind", "p_u", "p_psi"}, "objective")
    kind = _get_str(node, "kind", "objective", choices=("transfer_f1", "keeping_f2"))
    out = {
        "kind": kind,
        "p_u": _get_pair(node, "p_u", "objective", default=[0.0, 0.0], minimum=0.0),
    }
    if kind == "keeping_f2":
        out["p_psi"] = _get_float(node, "p_psi", "objective", default=1.0, minimum=0.0)
    elif "p_psi" in node:
        _fail("objective.p_psi", "only meaningful for keeping_f2")
    return out


def _validate_stopping(rules, path: str) -> list[dict]:
    if not isinstance(rules, (list, tuple)):
        _fail(path, f"expected a list of stopping rules, got {rules!r}")
    out = []
    for i, rule in enumerate(rules):
        rp = f"{path}[{i}]"
        rule = _as_mapping(rule, rp)
        if len(rule) != 1:
            _fail(rp, "each rule is a one-key mapping "
                      "(objective_below | keeping_pair | stationarity_below)")
        (key, body), = rule.items()
        if key == "objective_below":
            out.append({"objective_below": _get_float({"v": body}, "v", rp)})
        elif key == "keeping_pair":
            body = _as_mapping(body, rp)
            _check_keys(body, {"terminal_below", "integral_below"}, rp)
            out.append({"keeping_pair": {
                "terminal_below": _get_float(body, "terminal_below", rp, positive=True),
                "integral_below": _get_float(body, "integral_below", rp, positive=True),
            }})
        elif key == "stationarity_below":
            body = _as_mapping(body, rp)
            _check_keys(body, {"epsilon", "relative"}, rp)
            out.append({"stationarity_below": {
                "epsilon": _get_float(body, "epsilon", rp, positive=True),
                "relative": _get_bool(body, "relative", rp, default=True),
            }})
        else:
            _fail(rp, f"unknown stopping rule {key!r}")
    return out


def _validate_gpm(node) -> dict:
    node = _as_mapping(node, "optimizer.gpm")
    _check_keys(node, {"form", "alpha", "beta", "gamma", "max_iters", "quadrature",
                       "step_scaling", "divergence_patience", "stopping"}, "optimizer.gpm")
    return {
        "form": _get_str(node, "form", "optimizer.gpm", choices=("1S", "2S", "3S")),
        "alpha": _get_float(node, "alpha", "optimizer.gpm", positive=True),
        "beta": _get_float(node, "beta", "optimizer.gpm", default=0.0, minimum=0.0),
        "gamma": _get_float(node, "gamma", "optimizer.gpm", default=0.0, minimum=0.0),
        "max_iters": _get_int(node, "max_iters", "optimizer.gpm", default=1000, minimum=0),
        "quadrature": _get_str(node, "quadrature", "optimizer.gpm",
                               default="exact", choices=("exact", "midpoint")),
        "step_scaling": _get_str(node, "step_scaling", "optimizer.gpm",
                                 default="density", choices=("density", "vector")),
        "divergence_patience": _get_int(node, "divergence_patience", "optimizer.gpm",
                                        default=50, minimum=1),
        "stopping": _validate_stopping(node.get("stopping", []), "optimizer.gpm.stopping"),
    }


def _validate_ga(node, model: dict) -> dict:
    node = _as_mapping(node, "optimizer.ga")
    mode = _get_str(node, "mode", "optimizer.ga", choices=GA_MODES)
    common = {"mode", "population_size", "generations", "mutation_probability",
              "crossover_probability", "parents_fraction", "elite_count", "n_seeds",
              "m_sin", "gamma_bounds", "omega_ranges", "milestones"}
    if mode == "keeping_class":
        _check_keys(node, common | {"p_y"}, "optimizer.ga")
    else:
        _check_keys(node, common | {"p_x", "p_t", "t_range"}, "optimizer.ga")
    m_sin = _get_int(node, "m_sin", "optimizer.ga", default=3, minimum=1)
    omega = node.get("omega_ranges", [[3.0, 10.0], [2.0, 4.0]])
    if (not isinstance(omega, (list, tuple)) or len(omega) != 2
            or any(not isinstance(r, (list, tuple)) or len(r) != 2 for r in omega)):
        _fail("optimizer.ga.omega_ranges", f"expected [[lo1, hi1], [lo2, hi2]], got {omega!r}")
    omega = [[float(r[0]), float(r[1])] for r in omega]
    for l, (lo, hi) in enumerate(omega):
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
            _fail(f"optimizer.ga.omega_ranges[{l}]", f"expected lo <= hi, got {[lo, hi]}")
    out = {
        "mode": mode,
        "population_size": _get_int(node, "population_size", "optimizer.ga",
                                    default=100, minimum=2),
        "generations": _get_int(node, "generations", "optimizer.ga", default=300, minimum=0),
        "mutation_probability": _get_float(node, "mutation_probability", "optimizer.ga",
                                           default=0.1, minimum=0.0),
        "crossover_probability": _get_float(node, "crossover_probability", "optimizer.ga",
                                            default=0.5, minimum=0.0),
        "parents_fraction": _get_float(node, "parents_fraction", "optimizer.ga",
                                       default=0.3, minimum=0.0),
        "elite_count": _get_int(node, "elite_count", "optimizer.ga", default=1, minimum=0),
        "n_seeds": _get_int(node, "n_seeds", "optimizer.ga", default=1, minimum=1),
        "m_sin": m_sin,
        "gamma_bounds": _get_pair(node, "gamma_bounds", "optimizer.ga",
                                  default=list(model["b_bar"]), minimum=0.0),
        "omega_ranges": omega,
        "milestones": _get_float_list(node, "milestones", "optimizer.ga",
                                      default=[], min_len=0),
    }
    for prob in ("mutation_probability", "crossover_probability", "parents_fraction"):
        if out[prob] > 1.0:
            _fail(f"optimizer.ga.{prob}", f"expected <= 1, got {out[prob]}")
    if mode == "keeping_class":
        out["p_y"] = _get_float(node, "p_y", "optimizer.ga", default=0.0, minimum=0.0)
    else:
        out["p_x"] = _get_float(node, "p_x", "optimizer.ga", default=0.0, minimum=0.0)
        out["p_t"] = _get_float(node, "p_t", "optimizer.ga", default=0.0, minimum=0.0)
        t_range = _get_pair(node, "t_range", "optimizer.ga", positive=True)
        if t_range[1] < t_range[0]:
            _fail("optimizer.ga.t_range", f"expected T1 <= T2, got {t_range}")
        out["t_range"] = t_range
        if model["t_final"] != 1.0:
            _fail("model.t_final", "free_time_transfer runs on the unit grid; "
                                   "set t_final: 1.0 (the searched T scales the generator)")
    return out


def _validate_noise(node) -> dict:
    node = _as_mapping(node, "noise")
    _check_keys(node, {"sigmas", "runs_per_sigma", "clamp_to_envelopes", "t_scale"}, "noise")
    out = {
        "sigmas": _get_float_list(node, "sigmas", "noise",
                                  default=[0.05, 0.1, 0.15, 0.2], minimum=0.0),
        "runs_per_sigma": _get_int(node, "runs_per_sigma", "noise", default=1000, minimum=1),
        "clamp_to_envelopes": _get_bool(node, "clamp_to_envelopes", "noise", default=False),
    }
    if node.get("t_scale") is not None:
        out["t_scale"] = _get_float(node, "t_scale", "noise", positive=True)
    else:
        out["t_scale"] = None
    return out


def validate_config(cfg: dict) -> dict:
    """Check the whole document and return a fully-defaulted normalized copy."""
    cfg = _as_mapping(cfg, "config")
    _check_keys(cfg, {"model", "control", "objective", "optimizer", "noise",
                      "rng_seed", "name"}, "config")
    if "model" not in cfg:
        _fail("config", "missing required section 'model'")
    model = _validate_model(cfg["model"])

    if "optimizer" not in cfg:
        _fail("config", "missing required section 'optimizer'")
    opt = _as_mapping(cfg["optimizer"], "optimizer")
    kinds = sorted(set(opt) & {"gpm", "ga"})
    _check_keys(opt, {"gpm", "ga"}, "optimizer")
    if len(kinds) != 1:
        _fail("optimizer", f"exactly one of 'gpm' or 'ga' is required, found {kinds or 'none'}")

    out: dict = {"model": model}
    if kinds[0] == "gpm":
        if "control" not in cfg:
            _fail("config", "gpm runs need a 'control' section (the initial control)")
        if "objective" not in cfg:
            _fail("config", "gpm runs need an 'objective' section")
        out["control"] = _validate_control(cfg["control"])
        out["objective"] = _validate_objective(cfg["objective"])
        out["optimizer"] = {"gpm": _validate_gpm(opt["gpm"])}
    else:
        if "objective" in cfg:
            _fail("objective", "ga modes carry their own objective; drop this section")
        out["optimizer"] = {"ga": _validate_ga(opt["ga"], model)}
        if "control" in cfg:
            out["control"] = _validate_control(cfg["control"])

    if "noise" in cfg:
        out["noise"] = _validate_noise(cfg["noise"])
    out["rng_seed"] = _get_int(cfg, "rng_seed", "config", default=0)
    if "name" in cfg:
        out["name"] = _get_str(cfg, "name", "config")
    return out


# ---------------------------------------------------------------------------
# builders (normalized config -> domain objects)


def build_model(ncfg: dict) -> ChainModel:
    mc = ncfg["model"]
    sigma = mc["sigma"]
    if isinstance(sigma, str):
        sigma_value = float(sigma.split(":", 1)[1])
        sigma_arr = None
    else:
        sigma_value = 1.0
        sigma_arr = np.asarray(sigma, dtype=float)
    model = default_chain_model(
        mc["n_levels"], mc["t_final"], mc["n_intervals"],
        coupling=mc["coupling"],
        b_bar=tuple(mc["b_bar"]),
        q=tuple(mc["q"]),
        shape_const=tuple(mc["shape_const"]),
        psi0_site=mc["psi0_site"],
        psig_site=mc["psig_site"],
        sigma_value=sigma_value,
        flat_bounds=mc["flat_bounds"],
    )
    if sigma_arr is None:
        return model
    return ChainModel(
        grid=model.grid, h0=model.h0, v_ops=model.v_ops, sigma=sigma_arr,
        envelopes=model.envelopes, shapes=model.shapes,
        psi0=model.psi0, psig=model.psig,
    )


def build_initial_control(ncfg: dict, model: ChainModel) -> PConstControl:
    cc = ncfg.get("control")
    if cc is None:
        raise ConfigError("config has no control section to build from")
    kind = cc["kind"]
    if kind == "zero":
        return PConstControl(np.zeros((2, model.n_intervals)))
    if kind == "trapezoid":
        return trapezoid_profile_control(
            model.grid, model.envelopes,
            knot_fractions=tuple(cc["knot_fractions"]),
            shoulder_levels=tuple(tuple(p) for p in cc["shoulder_levels"]),
            baselines=tuple(cc["baselines"]),
            mirrored=cc["mirrored"],
        )
    if kind == "sin_class":
        params = SinClassParams(
            gamma=np.asarray(cc["gamma"], dtype=float),
            omega=np.asarray(cc["omega"], dtype=float),
        )
        return sample_sin_class(params, model)
    # csv
    cols = read_csv_columns(cc["path"])
    for need in ("u_1", "u_2"):
        if need not in cols:
            raise ConfigError(f"control.path: {cc['path']} lacks required column {need!r}")
    values = np.vstack([cols["u_1"], cols["u_2"]])
    if values.shape[1] != model.n_intervals:
        raise ConfigError(
            f"control.path: {cc['path']} has {values.shape[1]} rows, "
            f"model expects {model.n_intervals}")
    ctl = PConstControl(values)
    if not ctl.feasible(model.envelopes):
        raise ConfigError("control.path: initial control violates the envelope bounds")
    return ctl


def build_objective(ncfg: dict) -> Objective:
    oc = ncfg["objective"]
    if oc["kind"] == "transfer_f1":
        return Objective("transfer_f1", p_u=tuple(oc["p_u"]))
    return Objective("keeping_f2", p_u=tuple(oc["p_u"]), p_psi=oc["p_psi"])


def build_gpm_config(ncfg: dict) -> GpmConfig:
    gc = ncfg["optimizer"]["gpm"]
    rules = []
    for rule in gc["stopping"]:
        (key, body), = rule.items()
        if key == "objective_below":
            rules.append(ObjectiveBelow(body))
        elif key == "keeping_pair":
            rules.append(KeepingPair(body["terminal_below"], body["integral_below"]))
        else:
            rules.append(StationarityBelow(body["epsilon"], body["relative"]))
    return GpmConfig(
        form=gc["form"], alpha=gc["alpha"], beta=gc["beta"], gamma=gc["gamma"],
        max_iters=gc["max_iters"], stopping=tuple(rules), quadrature=gc["quadrature"],
        step_scaling=gc["step_scaling"], divergence_patience=gc["divergence_patience"],
    )


def build_ga_parts(ncfg: dict, model: ChainModel):
    """Return (objective, bounds, GaConfig, n_seeds, milestones, mode)."""
    from .ga import (FreeTimeClassObjective, KeepingClassObjective,
                     free_time_class_box, keeping_class_box)

    gc = ncfg["optimizer"]["ga"]
    config = GaConfig(
        population_size=gc["population_size"],
        generations=gc["generations"],
        mutation_probability=gc["mutation_probability"],
        crossover_probability=gc["crossover_probability"],
        parents_fraction=gc["parents_fraction"],
        elite_count=gc["elite_count"],
        rng_seed=ncfg["rng_seed"],
    )
    gb = tuple(gc["gamma_bounds"])
    orng = tuple(tuple(r) for r in gc["omega_ranges"])
    if gc["mode"] == "keeping_class":
        objective = KeepingClassObjective(model, gc["m_sin"], gc["p_y"])
        bounds = keeping_class_box(gb, orng, gc["m_sin"])
    else:
        objective = FreeTimeClassObjective(model, gc["m_sin"], gc["p_x"], gc["p_t"])
        bounds = free_time_class_box(gb, orng, gc["m_sin"], tuple(gc["t_range"]))
    return objective, bounds, config, gc["n_seeds"], gc["milestones"], gc["mode"]


def build_noise_config(ncfg: dict) -> NoiseStudyConfig:
    nc = ncfg.get("noise")
    if nc is None:
        raise ConfigError("config has no noise section")
    return NoiseStudyConfig(
        sigmas=tuple(nc["sigmas"]),
        runs_per_sigma=nc["runs_per_sigma"],
        rng_seed=ncfg["rng_seed"],
        clamp_to_envelopes=nc["clamp_to_envelopes"],
    )
