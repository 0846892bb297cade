"""Projected gradient optimization in one-, two-, and three-step forms.

The update is

    a(k+1) = Pr_Q( a(k) - alpha * g(a(k))
                   + beta  * (a(k) - a(k-1))        [2S and 3S]
                   + gamma * (a(k-1) - a(k-2)) )    [3S only]

where Pr_Q clips componentwise onto the envelope box and g is the step
direction configured by ``step_scaling``:

    density (default): the objective gradient with each component divided by
        its interval length, i.e. the functional gradient density sampled at
        the interval midpoints.  Step sizes like alpha = 2 then mean the same
        thing at every grid resolution, which is the convention the shipped
        presets are tuned for.
    vector: the raw gradient of f with respect to the stacked vector a.  Its
        components scale with dt, so alpha must grow like M to keep the same
        effective step.

Both choices have exactly the same stationary points: the box fixed-point
condition is componentwise and invariant under positive rescaling.  Multi-step
forms warm up through the lower ones: 2S takes a 1S step at k = 0, and 3S
takes a 1S step at k = 0 and a 2S step at k = 1.  A point is stationary
exactly when the residual ``||a - Pr_Q(a - alpha * g(a))||_2`` vanishes.

Complexity is measured in solved Cauchy problems: the initial objective
evaluation costs one, and each iteration adds one backward sweep for the
gradient plus one forward sweep for the new iterate, so the ledger reads
2k + 1 after k iterations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .controls import PConstControl, project_box
from .errors import InputError
from .gradient import grad_f
from .model import ChainModel
from .objectives import Objective, evaluate_objective
from .propagator import CauchyCounter

__all__ = [
    "ObjectiveBelow",
    "KeepingPair",
    "StationarityBelow",
    "GpmConfig",
    "GpmIteration",
    "GpmRunRecord",
    "gpm_step",
    "stationarity_residual",
    "run_gpm",
]

FORMS = ("1S", "2S", "3S")
STEP_SCALINGS = ("density", "vector")


@dataclass(frozen=True)
class ObjectiveBelow:
    """Stop once the objective value falls under ``threshold``."""

    threshold: float

    def describe(self) -> str:
        return f"objective < {self.threshold:g}"


@dataclass(frozen=True)
class KeepingPair:
    """Stop once both F(psi(T)) and the running infidelity integral are small."""

    terminal_below: float
    integral_below: float

    def describe(self) -> str:
        return (
            f"terminal infidelity < {self.terminal_below:g} and "
            f"infidelity integral < {self.integral_below:g}"
        )


@dataclass(frozen=True)
class StationarityBelow:
    """Stop once the projection residual (relative by default) drops under epsilon."""

    epsilon: float
    relative: bool = True

    def describe(self) -> str:
        kind = "relative " if self.relative else ""
        return f"{kind}stationarity residual < {self.epsilon:g}"


StoppingRule = ObjectiveBelow | KeepingPair | StationarityBelow


@dataclass(frozen=True)
class GpmConfig:
    form: str
    alpha: float
    beta: float = 0.0
    gamma: float = 0.0
    max_iters: int = 1000
    stopping: tuple[StoppingRule, ...] = ()
    quadrature: str = "exact"
    step_scaling: str = "density"
    divergence_patience: int = 50
    compute_final_residual: bool = True

    def __post_init__(self) -> None:
        if self.form not in FORMS:
            raise InputError(f"form must be one of {FORMS}, got {self.form!r}")
        if self.step_scaling not in STEP_SCALINGS:
            raise InputError(
                f"step_scaling must be one of {STEP_SCALINGS}, got {self.step_scaling!r}"
            )
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise InputError("alpha must be positive")
        for name in ("beta", "gamma"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val >= 0):
                raise InputError(f"{name} must be non-negative")
        if self.max_iters < 0:
            raise InputError("max_iters must be >= 0")


@dataclass
class GpmIteration:
    k: int
    value: float
    terms: dict[str, float]
    cauchy_count: int
    residual: float | None = None
    residual_rel: float | None = None


@dataclass
class GpmRunRecord:
    iterations: list[GpmIteration]
    final_control: PConstControl
    status: str  # "converged" | "iteration_cap" | "diverged"
    stop_rule: str | None
    final_residual: float | None
    final_residual_rel: float | None
    cauchy_optimization: int
    cauchy_diagnostics: int
    wall_time_s: float
    form: str

    @property
    def final_value(self) -> float:
        return self.iterations[-1].value

    @property
    def n_iterations(self) -> int:
        return self.iterations[-1].k


def _effective_form(form: str, k: int) -> str:
    if form == "1S" or k == 0:
        return "1S"
    if form == "2S" or k == 1:
        return "2S"
    return "3S"


def gpm_step(
    a: np.ndarray,
    a_prev: np.ndarray | None,
    a_prev2: np.ndarray | None,
    grad: np.ndarray,
    config: GpmConfig,
    envelopes_flat: np.ndarray,
    k: int,
) -> np.ndarray:
    """One projected step of the configured form at iteration index k."""
    direction = -config.alpha * grad
    eff = _effective_form(config.form, k)
    if eff in ("2S", "3S"):
        direction = direction + config.beta * (a - a_prev)
    if eff == "3S":
        direction = direction + config.gamma * (a_prev - a_prev2)
    return np.clip(a + direction, -envelopes_flat, envelopes_flat)


def stationarity_residual(
    a: np.ndarray, grad: np.ndarray, alpha: float, envelopes_flat: np.ndarray
) -> float:
    """||a - Pr_Q(a - alpha * grad)||_2; zero exactly at box-stationary points."""
    trial = np.clip(a - alpha * grad, -envelopes_flat, envelopes_flat)
    return float(np.linalg.norm(a - trial))


def _objective_rule_hit(rules, entry: GpmIteration) -> StoppingRule | None:
    for rule in rules:
        if isinstance(rule, ObjectiveBelow) and entry.value < rule.threshold:
            return rule
        if isinstance(rule, KeepingPair):
            terminal = entry.terms.get("terminal_infidelity")
            integral = entry.terms.get("integral_infidelity")
            if (
                terminal is not None
                and integral is not None
                and terminal < rule.terminal_below
                and integral < rule.integral_below
            ):
                return rule
    return None


def run_gpm(
    model: ChainModel,
    objective: Objective,
    control0: PConstControl,
    config: GpmConfig,
    *,
    counter: CauchyCounter | None = None,
) -> GpmRunRecord:
    """Minimize the objective from ``control0``; see the module docstring for the ledger."""
    t_start = time.perf_counter()
    env_flat = model.envelopes.ravel()
    if config.step_scaling == "density":
        step_scale = np.tile(1.0 / model.grid.dts, model.envelopes.shape[0])
    else:
        step_scale = np.ones_like(env_flat)
    a = np.clip(control0.as_vector(), -env_flat, env_flat)
    control = PConstControl.from_vector(a, model.n_intervals)

    opt_solves = 1
    diag_solves = 0
    ev = evaluate_objective(model, control, objective, counter=counter)
    iterations = [GpmIteration(0, ev.value, ev.terms, opt_solves)]
    status: str | None = None
    stop_rule: str | None = None

    hit = _objective_rule_hit(config.stopping, iterations[0])
    if hit is not None:
        status, stop_rule = "converged", hit.describe()

    a_prev: np.ndarray | None = None
    a_prev2: np.ndarray | None = None
    increase_streak = 0
    last_grad: np.ndarray | None = None
    k = 0

    while status is None and k < config.max_iters:
        gres = grad_f(
            model, control, objective,
            forward=ev.sweep, quadrature=config.quadrature, counter=counter,
        )
        opt_solves += 1
        last_grad = gres.gradient * step_scale
        entry = iterations[-1]
        entry.residual = stationarity_residual(a, last_grad, config.alpha, env_flat)
        entry.residual_rel = entry.residual / max(float(np.linalg.norm(a)), 1e-300)
        for rule in config.stopping:
            if isinstance(rule, StationarityBelow):
                res = entry.residual_rel if rule.relative else entry.residual
                if res < rule.epsilon:
                    status, stop_rule = "converged", rule.describe()
                    break
        if status is not None:
            break

        a_next = gpm_step(a, a_prev, a_prev2, last_grad, config, env_flat, k)
        a_prev2, a_prev, a = a_prev, a, a_next
        control = PConstControl.from_vector(a, model.n_intervals)
        if not control.feasible(model.envelopes):
            raise RuntimeError("projected iterate left the feasible box")

        prev_value = ev.value
        ev = evaluate_objective(model, control, objective, counter=counter)
        opt_solves += 1
        k += 1
        iterations.append(GpmIteration(k, ev.value, ev.terms, opt_solves))

        increase_streak = increase_streak + 1 if ev.value > prev_value else 0
        if increase_streak >= config.divergence_patience:
            status = "diverged"
            stop_rule = f"divergence guard: {config.divergence_patience} consecutive increases"
            break

        hit = _objective_rule_hit(config.stopping, iterations[-1])
        if hit is not None:
            status, stop_rule = "converged", hit.describe()

    if status is None:
        status = "iteration_cap"

    final_residual = iterations[-1].residual
    final_residual_rel = iterations[-1].residual_rel
    if final_residual is None and config.compute_final_residual:
        gres = grad_f(
            model, control, objective,
            forward=ev.sweep, quadrature=config.quadrature, counter=counter,
        )
        diag_solves += 1
        final_residual = stationarity_residual(
            a, gres.gradient * step_scale, config.alpha, env_flat
        )
        final_residual_rel = final_residual / max(float(np.linalg.norm(a)), 1e-300)
        iterations[-1].residual = final_residual
        iterations[-1].residual_rel = final_residual_rel

    return GpmRunRecord(
        iterations=iterations,
        final_control=control,
        status=status,
        stop_rule=stop_rule,
        final_residual=final_residual,
        final_residual_rel=final_residual_rel,
        cauchy_optimization=opt_solves,
        cauchy_diagnostics=diag_solves,
        wall_time_s=time.perf_counter() - t_start,
        form=config.form,
    )
