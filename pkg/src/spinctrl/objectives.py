"""Objective functionals for transfer, keeping, and the genetic search classes.

All objectives are built from the squared-overlap infidelity
``F(psi; psig) = 1 - |<psig, psi>|^2``:

* ``f1`` (transfer): terminal infidelity plus shaped quadratic control cost.
* ``f2`` (keeping): adds the running infidelity integral, discretized by the
  trapezoid rule over grid nodes, weighted by ``p_psi``.
* ``f3`` (free-time transfer): terminal infidelity of the rescaled unit-grid
  propagation plus l1 node cost and a final-time charge.
* ``f4`` (keeping over the sinusoidal class): worst node infidelity plus an
  l1 charge on the class coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controls import PConstControl, SinClassParams, rescale_free_time, sample_sin_class
from .errors import InputError
from .model import ChainModel
from .propagator import CauchyCounter, ForwardSweep, propagate_forward

__all__ = [
    "Objective",
    "ObjectiveEvaluation",
    "infidelity",
    "node_infidelities",
    "control_penalty",
    "eval_f1",
    "eval_f2",
    "evaluate_objective",
    "eval_free_time_f3",
    "eval_keeping_f4",
]

TRANSFER_F1 = "transfer_f1"
KEEPING_F2 = "keeping_f2"


@dataclass(frozen=True)
class Objective:
    """Which gradient-based functional to optimize, with its weights.

    ``p_u`` are the per-channel quadratic control penalty weights; ``p_psi``
    weights the running infidelity integral and matters only for keeping.
    """

    kind: str = TRANSFER_F1
    p_u: tuple[float, float] = (0.0, 0.0)
    p_psi: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in (TRANSFER_F1, KEEPING_F2):
            raise InputError(f"unknown objective kind {self.kind!r}")
        if len(self.p_u) != 2 or any(w < 0 for w in self.p_u):
            raise InputError("p_u must be two non-negative weights")
        if self.p_psi < 0:
            raise InputError("p_psi must be non-negative")


@dataclass
class ObjectiveEvaluation:
    value: float
    terms: dict[str, float]
    sweep: ForwardSweep | None = field(default=None, repr=False)


def infidelity(psi: np.ndarray, psig: np.ndarray) -> float:
    """F = 1 - |<psig, psi>|^2, clipped into [0, 1] against rounding."""
    overlap = np.vdot(psig, psi)
    return float(min(max(1.0 - (overlap.real**2 + overlap.imag**2), 0.0), 1.0))


def node_infidelities(nodes: np.ndarray, psig: np.ndarray) -> np.ndarray:
    """F(psi(t_j)) for all node states, shape (M+1,)."""
    overlaps = nodes @ np.conj(psig)
    return np.clip(1.0 - np.abs(overlaps) ** 2, 0.0, 1.0)


def control_penalty(model: ChainModel, values: np.ndarray, p_u: tuple[float, float]) -> float:
    """Shaped quadratic cost sum_l p_u[l] * sum_j dt_j * S_{l,j} * c_{l,j}^2."""
    dts = model.grid.dts
    total = 0.0
    for l in range(2):
        if p_u[l] != 0.0:
            total += p_u[l] * float(np.sum(dts * model.shapes[l] * values[l] ** 2))
    return total


def _forward(model, control, forward, counter):
    if forward is not None:
        return forward
    return propagate_forward(model, control, counter=counter)


def eval_f1(
    model: ChainModel,
    control: PConstControl,
    p_u: tuple[float, float] = (0.0, 0.0),
    *,
    forward: ForwardSweep | None = None,
    counter: CauchyCounter | None = None,
) -> ObjectiveEvaluation:
    """Transfer objective f1 = F(psi(T)) + control penalty."""
    sweep = _forward(model, control, forward, counter)
    terminal = infidelity(sweep.nodes[-1], model.psig)
    penalty = control_penalty(model, np.asarray(control.values), p_u)
    terms = {"terminal_infidelity": terminal, "control_penalty": penalty}
    return ObjectiveEvaluation(terminal + penalty, terms, sweep)


def eval_f2(
    model: ChainModel,
    control: PConstControl,
    p_psi: float = 1.0,
    p_u: tuple[float, float] = (0.0, 0.0),
    *,
    forward: ForwardSweep | None = None,
    counter: CauchyCounter | None = None,
) -> ObjectiveEvaluation:
    """Keeping objective f2 = F(psi(T)) + p_psi * trapz(F over nodes) + control penalty.

    The reported breakdown carries the raw integral (before the p_psi weight)
    and the worst node infidelity over j = 1..M.
    """
    sweep = _forward(model, control, forward, counter)
    infs = node_infidelities(sweep.nodes, model.psig)
    terminal = float(infs[-1])
    integral = float(np.dot(model.grid.trapezoid_weights, infs))
    worst = float(np.max(infs[1:]))
    penalty = control_penalty(model, np.asarray(control.values), p_u)
    terms = {
        "terminal_infidelity": terminal,
        "integral_infidelity": integral,
        "max_node_infidelity": worst,
        "control_penalty": penalty,
    }
    return ObjectiveEvaluation(terminal + p_psi * integral + penalty, terms, sweep)


def evaluate_objective(
    model: ChainModel,
    control: PConstControl,
    objective: Objective,
    *,
    forward: ForwardSweep | None = None,
    counter: CauchyCounter | None = None,
) -> ObjectiveEvaluation:
    if objective.kind == TRANSFER_F1:
        return eval_f1(model, control, objective.p_u, forward=forward, counter=counter)
    return eval_f2(model, control, objective.p_psi, objective.p_u, forward=forward, counter=counter)


def eval_free_time_f3(
    model_tau: ChainModel,
    params: SinClassParams,
    p_x: float = 0.0,
    p_t: float = 0.0,
    *,
    counter: CauchyCounter | None = None,
    keep_sweep: bool = False,
) -> ObjectiveEvaluation:
    """Free-final-time transfer objective on the unit grid.

    The class member is sampled at t = T * taubar_j, clamped to the model
    envelopes, and propagated with generator scale T.  The l1 term charges the
    control values at interior nodes (right-continuous convention, so node
    tau_j carries the value of the interval starting there), and ``p_t``
    charges the final time itself.
    """
    t_final, control = rescale_free_time(params, model_tau.grid, model_tau.envelopes)
    sweep = propagate_forward(model_tau, control, scale=t_final, with_midpoints=False, counter=counter)
    terminal = infidelity(sweep.nodes[-1], model_tau.psig)
    l1 = float(np.sum(np.abs(control.values[:, 1:]))) if p_x != 0.0 else 0.0
    terms = {
        "terminal_infidelity": terminal,
        "l1_node_penalty": p_x * l1,
        "time_penalty": p_t * t_final,
        "t_final": t_final,
    }
    value = terminal + p_x * l1 + p_t * t_final
    return ObjectiveEvaluation(value, terms, sweep if keep_sweep else None)


def eval_keeping_f4(
    model: ChainModel,
    params: SinClassParams,
    p_y: float = 0.0,
    *,
    counter: CauchyCounter | None = None,
    keep_sweep: bool = False,
) -> ObjectiveEvaluation:
    """Keeping objective over the sinusoidal class: worst node infidelity plus
    p_y times the l1 norm of the class coordinate vector."""
    control = sample_sin_class(params, model)
    sweep = propagate_forward(model, control, with_midpoints=False, counter=counter)
    infs = node_infidelities(sweep.nodes, model.psig)
    worst = float(np.max(infs[1:]))
    coord = float(np.sum(np.abs(params.gamma)) + np.sum(np.abs(params.omega))) if p_y != 0.0 else 0.0
    terms = {"max_node_infidelity": worst, "coord_penalty": p_y * coord}
    return ObjectiveEvaluation(worst + p_y * coord, terms, sweep if keep_sweep else None)
