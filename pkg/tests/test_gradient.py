"""Adjoint gradient against the extended-precision finite-difference oracle.

The master check: for random feasible controls the assembled gradient of f1
and f2 must match central finite differences (step 1e-6) componentwise to
relative 1e-6, with absolute 1e-9 where the component is below 1e-3 in
magnitude.  The full-width protocol lives in the acceptance suite; here the
same oracle runs on a reduced draw count plus the structural properties of
the sweeps.
"""

from __future__ import annotations

import numpy as np
import pytest

from spinctrl.controls import PConstControl
from spinctrl.errors import InputError
from spinctrl.gradient import (
    TRANSVERSALITY_SCALE,
    adjoint_terminal_transfer,
    backward_sweep_keeping,
    backward_sweep_transfer,
    grad_f,
)
from spinctrl.model import default_chain_model
from spinctrl.objectives import Objective, evaluate_objective
from spinctrl.propagator import CauchyCounter, propagate_forward

from conftest import fd_gradient_ld, random_feasible_values


def transfer_model(n, t_final, m):
    return default_chain_model(n, t_final, m, b_bar=(5.0, 3.0), flat_bounds=True,
                               shape_const=(25.0, 25.0))


def keeping_model(n, t_final, m):
    return default_chain_model(n, t_final, m, b_bar=(5.0, 3.0), flat_bounds=True,
                               shape_const=(25.0, 25.0), psi0_site=n, psig_site=n)


def assert_matches_fd(grad, fd, rel_tol=1e-6, abs_tol=1e-9, small=1e-3):
    err = np.abs(grad - fd)
    tiny = np.abs(grad) < small
    if np.any(~tiny):
        rel = err[~tiny] / np.abs(fd[~tiny])
        assert np.max(rel) < rel_tol, f"relative error {np.max(rel):.3e}"
    if np.any(tiny):
        assert np.max(err[tiny]) < abs_tol, f"absolute error {np.max(err[tiny]):.3e}"


@pytest.mark.parametrize("n,m", [(2, 4), (3, 4), (3, 8), (3, 16)])
@pytest.mark.parametrize("p_u", [(0.0, 0.0), (6.5e-5, 6.5e-5)])
def test_transfer_gradient_matches_fd(n, m, p_u, rng):
    model = transfer_model(n, np.pi, m)
    for _ in range(3):
        values = random_feasible_values(model, rng)
        res = grad_f(model, PConstControl(values), Objective("transfer_f1", p_u=p_u))
        fd = fd_gradient_ld(model, values, p_u=p_u, p_psi=None)
        assert_matches_fd(res.gradient, fd)


@pytest.mark.parametrize("n,m", [(2, 4), (3, 4), (3, 8), (3, 16)])
@pytest.mark.parametrize("p_u", [(0.0, 0.0), (6.5e-5, 6.5e-5)])
def test_keeping_gradient_matches_fd(n, m, p_u, rng):
    model = keeping_model(n, 0.8, m)
    for _ in range(3):
        values = random_feasible_values(model, rng)
        res = grad_f(model, PConstControl(values), Objective("keeping_f2", p_u=p_u, p_psi=1.0))
        fd = fd_gradient_ld(model, values, p_u=p_u, p_psi=1.0)
        assert_matches_fd(res.gradient, fd)


def test_gradient_float64_fd_cross_check(rng):
    # same check against a plain float64 central difference, looser floor
    model = transfer_model(3, 1.5, 8)
    values = random_feasible_values(model, rng)
    obj = Objective("transfer_f1")
    res = grad_f(model, PConstControl(values), obj)
    h = 1e-6
    vec = values.ravel()
    for s in rng.choice(vec.size, size=6, replace=False):
        up, dn = vec.copy(), vec.copy()
        up[s] += h
        dn[s] -= h
        f_up = evaluate_objective(model, PConstControl.from_vector(up, 8), obj).value
        f_dn = evaluate_objective(model, PConstControl.from_vector(dn, 8), obj).value
        fd = (f_up - f_dn) / (2 * h)
        assert abs(res.gradient[s] - fd) < 1e-7 + 1e-5 * abs(fd)


def test_midpoint_quadrature_second_order(rng):
    # the midpoint-rectangle gradient converges to the exact one at order >= 2
    # under grid refinement of the same smooth control function
    defects = []
    for m in (8, 16, 32, 64):
        model = keeping_model(3, 0.8, m)
        t = model.grid.midpoints
        values = np.vstack([1.5 * np.sin(3.0 * t), 1.0 * np.cos(2.0 * t)])
        ctl = PConstControl(values)
        obj = Objective("keeping_f2", p_psi=1.0)
        g_exact = grad_f(model, ctl, obj, quadrature="exact").gradient
        g_mid = grad_f(model, ctl, obj, quadrature="midpoint").gradient
        # compare per-interval densities so the defect is not hidden by dt
        defects.append(np.max(np.abs(g_exact - g_mid)) / (model.grid.t_final / m))
    for a, b in zip(defects, defects[1:]):
        assert b < a / 3.0, f"midpoint defect sequence {defects} not O(dt^2)"


def test_backward_transfer_preserves_norm(rng):
    model = transfer_model(3, 2.0, 32)
    values = random_feasible_values(model, rng)
    fwd = propagate_forward(model, values)
    eta_final = adjoint_terminal_transfer(fwd.nodes[-1], model.psig)
    back = backward_sweep_transfer(model, fwd, eta_final)
    norms = np.linalg.norm(back.nodes, axis=1)
    assert np.max(np.abs(norms - norms[-1])) < 1e-12 * max(norms[-1], 1.0)


def test_keeping_sweep_with_zero_weight_matches_transfer(rng):
    model = keeping_model(3, 0.8, 16)
    values = random_feasible_values(model, rng)
    fwd = propagate_forward(model, values)
    eta_final = adjoint_terminal_transfer(fwd.nodes[-1], model.psig)
    a = backward_sweep_transfer(model, fwd, eta_final)
    b = backward_sweep_keeping(model, fwd, eta_final, p_psi=0.0)
    np.testing.assert_array_equal(a.nodes, b.nodes)
    np.testing.assert_array_equal(a.mids, b.mids)


def test_transversality_state():
    psig = np.array([0.0, 1.0], dtype=complex)
    psi_perp = np.array([1.0, 0.0], dtype=complex)
    np.testing.assert_array_equal(adjoint_terminal_transfer(psi_perp, psig), 0.0 * psig)
    psi_match = np.exp(0.7j) * psig
    expected = TRANSVERSALITY_SCALE * np.exp(0.7j) * psig
    np.testing.assert_allclose(adjoint_terminal_transfer(psi_match, psig), expected, atol=1e-15)


def test_gradient_complexity_accounting(rng):
    model = transfer_model(3, 1.0, 8)
    values = random_feasible_values(model, rng)
    ctl = PConstControl(values)
    counter = CauchyCounter()
    grad_f(model, ctl, Objective("transfer_f1"), counter=counter)
    assert counter.count == 2  # standalone call: forward + backward
    fwd = propagate_forward(model, values, counter=counter)
    grad_f(model, ctl, Objective("transfer_f1"), forward=fwd, counter=counter)
    assert counter.count == 4  # reused forward: one extra backward only


def test_gradient_first_order_increment(rng):
    # f(a + eps d) - f(a) = eps <g, d> + O(eps^2)
    model = keeping_model(3, 0.8, 12)
    values = random_feasible_values(model, rng) * 0.5
    obj = Objective("keeping_f2", p_psi=1.0, p_u=(1e-4, 1e-4))
    ctl = PConstControl(values)
    g = grad_f(model, ctl, obj).gradient
    f0 = evaluate_objective(model, ctl, obj).value
    d = rng.normal(size=g.size)
    d /= np.linalg.norm(d)
    errs = []
    for eps in (1e-3, 5e-4, 2.5e-4):
        ctl_eps = PConstControl.from_vector(values.ravel() + eps * d, 12)
        f_eps = evaluate_objective(model, ctl_eps, obj).value
        errs.append(abs(f_eps - f0 - eps * float(g @ d)))
    # halving eps shrinks the defect roughly fourfold
    assert errs[1] < errs[0] / 3.0 and errs[2] < errs[1] / 3.0


def test_gradient_rejects_unknown_quadrature(rng):
    model = transfer_model(2, 1.0, 4)
    ctl = PConstControl(np.zeros((2, 4)))
    with pytest.raises(InputError):
        grad_f(model, ctl, Objective("transfer_f1"), quadrature="simpson")


def test_gradient_requires_midpoints(rng):
    model = transfer_model(2, 1.0, 4)
    ctl = PConstControl(np.zeros((2, 4)))
    fwd = propagate_forward(model, ctl, with_midpoints=False)
    with pytest.raises(InputError):
        grad_f(model, ctl, Objective("transfer_f1"), forward=fwd)
