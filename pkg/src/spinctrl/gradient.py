"""Adjoint-state gradients of f1 and f2 over piecewise-constant controls.

One forward sweep and one backward sweep (two Cauchy problems) give the whole
gradient.  The adjoint eta obeys the same Schrodinger equation as psi and is
propagated backward from the transversality state at t = T; for the keeping
objective the trapezoid-discretized running cost enters the sweep as a source
impulse at every interior grid node, matching the node quadrature used by
``eval_f2`` so that the gradient below is the exact derivative of the
discrete objective.

Per interval, the derivative of f with respect to the constant value c_{l,j}
is the time integral of ``-Im <eta(t), sigma_j V_l psi(t)>``.  Both states
evolve under the same constant Hamiltonian inside the interval, so in the
interval eigenbasis the integrand is a sum of complex exponentials and the
integral has the closed form used by ``quadrature="exact"``: the midpoint
contraction filtered by sinc((lambda_a - lambda_b) * dt / 2).  Dropping the
sinc factor recovers the midpoint-rectangle scheme (``quadrature="midpoint"``),
which is cheaper to state but carries an O(dt^2) defect; it is kept for
comparison and converges to the exact mode at second order in dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controls import PConstControl
from .errors import InputError
from .model import ChainModel
from .objectives import KEEPING_F2, Objective
from .propagator import CauchyCounter, ForwardSweep, propagate_forward

__all__ = [
    "TRANSVERSALITY_SCALE",
    "BackwardSweep",
    "GradientResult",
    "adjoint_terminal_transfer",
    "backward_sweep_transfer",
    "backward_sweep_keeping",
    "grad_f",
]

# Transversality scale kappa in eta(T) = kappa * <psig, psi(T)> psig, for the
# convention <a, b> = sum conj(a_m) b_m.  Fixed once by calibration against the
# central finite-difference oracle (tests/test_gradient.py) and frozen here.
TRANSVERSALITY_SCALE = 2.0

QUADRATURES = ("exact", "midpoint")


@dataclass
class BackwardSweep:
    """Adjoint states at grid nodes and interval midpoints."""

    nodes: np.ndarray
    mids: np.ndarray


@dataclass
class GradientResult:
    gradient: np.ndarray
    forward: ForwardSweep
    adjoint: BackwardSweep
    value_terms: dict[str, float]


def adjoint_terminal_transfer(psi_final: np.ndarray, psig: np.ndarray) -> np.ndarray:
    """Transversality state kappa * <psig, psi(T)> psig for the transfer objective."""
    return TRANSVERSALITY_SCALE * np.vdot(psig, psi_final) * psig


def _sweep_back(model: ChainModel, forward: ForwardSweep, eta_final: np.ndarray,
                node_impulses: np.ndarray | None) -> BackwardSweep:
    m, n = model.n_intervals, model.n_levels
    nodes = np.empty((m + 1, n), dtype=complex)
    mids = np.empty((m, n), dtype=complex)
    evecs = forward.evecs
    phases = forward.half_phases
    complex_basis = np.iscomplexobj(evecs)
    eta = np.asarray(eta_final, dtype=complex)
    nodes[m] = eta
    for j in reversed(range(m)):
        v = evecs[j]
        y = (v.conj().T if complex_basis else v.T) @ eta
        ph = phases[j].conj()
        mids[j] = v @ (ph * y)
        eta = v @ ((ph * ph) * y)
        if node_impulses is not None and j >= 1:
            eta = eta + node_impulses[j]
        nodes[j] = eta
    return BackwardSweep(nodes=nodes, mids=mids)


def backward_sweep_transfer(
    model: ChainModel,
    forward: ForwardSweep,
    eta_final: np.ndarray,
    *,
    counter: CauchyCounter | None = None,
) -> BackwardSweep:
    """Homogeneous backward propagation of the adjoint from eta(T).

    Reuses the interval eigendata cached on the forward sweep.  Counts one
    Cauchy problem.
    """
    out = _sweep_back(model, forward, eta_final, None)
    if counter is not None:
        counter.add(1)
    return out


def backward_sweep_keeping(
    model: ChainModel,
    forward: ForwardSweep,
    eta_final: np.ndarray,
    p_psi: float,
    *,
    counter: CauchyCounter | None = None,
) -> BackwardSweep:
    """Backward adjoint propagation with the running-cost source.

    The source is the trapezoid-node discretization of the running infidelity
    term: crossing node t_j (0 < j < M) backward adds the impulse
    ``kappa * p_psi * w_j * <psig, psi(t_j)> psig`` where w_j is the node's
    trapezoid weight.  With p_psi = 0 this reduces bitwise to the transfer
    sweep.  Counts one Cauchy problem.
    """
    impulses = None
    if p_psi != 0.0:
        overlaps = forward.nodes @ np.conj(model.psig)
        coef = TRANSVERSALITY_SCALE * p_psi * model.grid.trapezoid_weights * overlaps
        impulses = coef[:, None] * model.psig[None, :]
    out = _sweep_back(model, forward, eta_final, impulses)
    if counter is not None:
        counter.add(1)
    return out


def _terminal_state(model: ChainModel, forward: ForwardSweep, objective: Objective) -> np.ndarray:
    eta = adjoint_terminal_transfer(forward.nodes[-1], model.psig)
    if objective.kind == KEEPING_F2 and objective.p_psi != 0.0:
        # the j = M trapezoid node of the running cost folds into the terminal state
        w_final = model.grid.trapezoid_weights[-1]
        eta = (1.0 + objective.p_psi * w_final) * eta
    return eta


def _dynamic_part(
    model: ChainModel,
    forward: ForwardSweep,
    adjoint: BackwardSweep,
    quadrature: str,
) -> np.ndarray:
    dts = model.grid.dts
    scale = forward.scale
    out = np.empty((2, model.n_intervals))
    if quadrature == "midpoint":
        for l, v_op in enumerate(model.v_ops):
            core = np.einsum("ja,ab,jb->j", adjoint.mids.conj(), v_op, forward.mids)
            out[l] = (-scale) * model.sigma * dts * core.imag
        return out

    evecs = forward.evecs
    conj_evecs = evecs.conj() if np.iscomplexobj(evecs) else evecs
    eta_hat = np.einsum("jba,jb->ja", conj_evecs, adjoint.mids)
    psi_hat = np.einsum("jba,jb->ja", conj_evecs, forward.mids)
    gaps = forward.evals[:, :, None] - forward.evals[:, None, :]
    # sinc filter of the interval average; np.sinc(x/pi) = sin(x)/x
    window = np.sinc(gaps * (scale * dts[:, None, None] / (2.0 * np.pi)))
    weighted = eta_hat.conj()[:, :, None] * window * psi_hat[:, None, :]
    for l, v_op in enumerate(model.v_ops):
        v_hat = np.einsum("jba,bc,jcd->jad", conj_evecs, v_op, evecs)
        core = np.einsum("jab,jab->j", weighted, v_hat)
        out[l] = (-scale) * model.sigma * dts * core.imag
    return out


def grad_f(
    model: ChainModel,
    control: PConstControl,
    objective: Objective,
    *,
    forward: ForwardSweep | None = None,
    quadrature: str = "exact",
    counter: CauchyCounter | None = None,
) -> GradientResult:
    """Full gradient of f1 or f2 with respect to the flattened control vector.

    Runs a forward sweep (skipped when ``forward`` is passed in) and one
    backward sweep, then assembles the per-interval components plus the exact
    derivative of the quadratic control penalty.  A standalone call therefore
    costs two Cauchy problems.
    """
    if quadrature not in QUADRATURES:
        raise InputError(f"quadrature must be one of {QUADRATURES}, got {quadrature!r}")
    if forward is None:
        forward = propagate_forward(model, control, counter=counter)
    if forward.mids.shape[0] != model.n_intervals:
        raise InputError("forward sweep lacks midpoint states; rerun with with_midpoints=True")
    eta_final = _terminal_state(model, forward, objective)
    if objective.kind == KEEPING_F2:
        adjoint = backward_sweep_keeping(model, forward, eta_final, objective.p_psi, counter=counter)
    else:
        adjoint = backward_sweep_transfer(model, forward, eta_final, counter=counter)

    grad = _dynamic_part(model, forward, adjoint, quadrature)
    values = np.asarray(control.values)
    dts = model.grid.dts
    for l in range(2):
        if objective.p_u[l] != 0.0:
            grad[l] += 2.0 * objective.p_u[l] * model.shapes[l] * values[l] * dts
    terms = {"terminal_infidelity": float(1.0 - abs(np.vdot(model.psig, forward.nodes[-1])) ** 2)}
    return GradientResult(gradient=grad.ravel(), forward=forward, adjoint=adjoint, value_terms=terms)
