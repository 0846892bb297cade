"""Projected gradient method: step arithmetic, stopping rules, complexity ledger."""

from __future__ import annotations

import numpy as np
import pytest

from spinctrl.controls import PConstControl
from spinctrl.errors import InputError
from spinctrl.gpm import (
    GpmConfig,
    KeepingPair,
    ObjectiveBelow,
    StationarityBelow,
    gpm_step,
    run_gpm,
    stationarity_residual,
)
from spinctrl.model import default_chain_model
from spinctrl.objectives import Objective
from spinctrl.propagator import CauchyCounter

from conftest import random_feasible_values


WIDE = np.full(6, 100.0)  # envelopes wide enough that clipping never bites


def test_config_validation():
    with pytest.raises(InputError):
        GpmConfig(form="4S", alpha=1.0)
    with pytest.raises(InputError):
        GpmConfig(form="1S", alpha=0.0)
    with pytest.raises(InputError):
        GpmConfig(form="1S", alpha=1.0, beta=-0.1)
    with pytest.raises(InputError):
        GpmConfig(form="3S", alpha=1.0, gamma=-1.0)
    with pytest.raises(InputError):
        GpmConfig(form="1S", alpha=1.0, max_iters=-1)


def test_step_form_arithmetic(rng):
    a = rng.normal(size=6)
    a1 = rng.normal(size=6)
    a2 = rng.normal(size=6)
    g = rng.normal(size=6)
    cfg1 = GpmConfig(form="1S", alpha=0.3)
    cfg2 = GpmConfig(form="2S", alpha=0.3, beta=0.9)
    cfg3 = GpmConfig(form="3S", alpha=0.3, beta=0.9, gamma=0.05)

    np.testing.assert_allclose(gpm_step(a, a1, a2, g, cfg1, WIDE, k=5), a - 0.3 * g)
    np.testing.assert_allclose(
        gpm_step(a, a1, a2, g, cfg2, WIDE, k=5), a - 0.3 * g + 0.9 * (a - a1)
    )
    np.testing.assert_allclose(
        gpm_step(a, a1, a2, g, cfg3, WIDE, k=5),
        a - 0.3 * g + 0.9 * (a - a1) + 0.05 * (a1 - a2),
    )


def test_step_warmup(rng):
    a = rng.normal(size=6)
    a1 = rng.normal(size=6)
    a2 = rng.normal(size=6)
    g = rng.normal(size=6)
    cfg2 = GpmConfig(form="2S", alpha=0.3, beta=0.9)
    cfg3 = GpmConfig(form="3S", alpha=0.3, beta=0.9, gamma=0.05)
    # multi-step forms fall back to the shorter ones while history is missing
    np.testing.assert_array_equal(gpm_step(a, None, None, g, cfg2, WIDE, k=0), a - 0.3 * g)
    np.testing.assert_array_equal(gpm_step(a, None, None, g, cfg3, WIDE, k=0), a - 0.3 * g)
    np.testing.assert_allclose(
        gpm_step(a, a1, None, g, cfg3, WIDE, k=1), a - 0.3 * g + 0.9 * (a - a1)
    )


def test_step_projects_onto_box(rng):
    env = np.full(6, 0.5)
    a = rng.uniform(-0.5, 0.5, size=6)
    g = rng.normal(size=6)
    out = gpm_step(a, None, None, g, GpmConfig(form="1S", alpha=50.0), env, k=0)
    assert np.all(np.abs(out) <= 0.5 + 1e-15)


def test_momentum_moves_without_gradient(rng):
    a = rng.normal(size=6)
    a1 = a - 0.1
    cfg = GpmConfig(form="2S", alpha=1.0, beta=0.93)
    out = gpm_step(a, a1, None, np.zeros(6), cfg, WIDE, k=3)
    np.testing.assert_allclose(out, a + 0.93 * (a - a1))


def test_stationarity_residual_cases(rng):
    env = np.full(4, 1.0)
    a_in = np.array([0.2, -0.3, 0.0, 0.5])
    assert stationarity_residual(a_in, np.zeros(4), 0.7, env) == 0.0
    # boundary point with the gradient pushing outward is stationary too
    a_bd = np.array([1.0, -1.0, 1.0, -1.0])
    g_out = np.array([-2.0, 3.0, -1.0, 0.5])
    assert stationarity_residual(a_bd, g_out, 0.7, env) == 0.0
    # interior point with unconstrained trial: exactly alpha * ||g||
    g = np.array([0.1, -0.2, 0.05, 0.0])
    expect = 0.7 * np.linalg.norm(g)
    assert abs(stationarity_residual(a_in * 0.1, g, 0.7, env) - expect) < 1e-15


def test_run_reduces_objective_and_keeps_ledger(small_model, rng):
    values = random_feasible_values(small_model, rng)
    counter = CauchyCounter()
    cfg = GpmConfig(form="1S", alpha=0.5, max_iters=40, compute_final_residual=True)
    rec = run_gpm(small_model, Objective("transfer_f1"), PConstControl(values), cfg,
                  counter=counter)
    assert rec.status == "iteration_cap"
    assert rec.final_value < rec.iterations[0].value
    assert rec.n_iterations == 40
    for entry in rec.iterations:
        assert entry.cauchy_count == 2 * entry.k + 1
    # cap run computes a gradient per completed iteration but none for the last point,
    # so the diagnostic residual costs one extra solve outside the optimization ledger
    assert rec.cauchy_optimization == 2 * 40 + 1
    assert rec.cauchy_diagnostics == 1
    assert counter.count == rec.cauchy_optimization + rec.cauchy_diagnostics
    assert rec.final_control.feasible(small_model.envelopes)
    assert rec.final_residual is not None and rec.final_residual >= 0


def test_run_stationarity_stop(small_model, rng):
    values = 0.2 * random_feasible_values(small_model, rng)
    cfg = GpmConfig(
        form="2S", alpha=0.8, beta=0.8, max_iters=4000,
        stopping=(StationarityBelow(1e-3, relative=True),),
    )
    rec = run_gpm(small_model, Objective("transfer_f1"), PConstControl(values), cfg)
    assert rec.status == "converged"
    assert "stationarity" in rec.stop_rule
    assert rec.final_residual_rel < 1e-3
    assert rec.cauchy_diagnostics == 0  # residual came from the optimization gradient


def test_run_objective_stop_immediately(small_model):
    ctl = PConstControl(np.zeros((2, 8)))
    cfg = GpmConfig(form="1S", alpha=0.1, max_iters=100,
                    stopping=(ObjectiveBelow(10.0),), compute_final_residual=False)
    counter = CauchyCounter()
    rec = run_gpm(small_model, Objective("transfer_f1"), ctl, cfg, counter=counter)
    assert rec.status == "converged"
    assert rec.n_iterations == 0
    assert rec.cauchy_optimization == 1
    assert rec.cauchy_diagnostics == 0
    assert counter.count == 1


def test_run_keeping_pair_rule():
    model = default_chain_model(3, 0.5, 8, b_bar=(5.0, 3.0), psi0_site=3, psig_site=3)
    ctl = PConstControl(np.zeros((2, 8)))
    cfg = GpmConfig(form="1S", alpha=0.1, max_iters=50,
                    stopping=(KeepingPair(terminal_below=2.0, integral_below=2.0),),
                    compute_final_residual=False)
    rec = run_gpm(model, Objective("keeping_f2", p_psi=1.0), ctl, cfg)
    assert rec.status == "converged"
    assert "terminal infidelity" in rec.stop_rule
    assert rec.n_iterations == 0


def test_run_max_iters_zero(small_model):
    ctl = PConstControl(np.zeros((2, 8)))
    cfg = GpmConfig(form="1S", alpha=0.1, max_iters=0)
    counter = CauchyCounter()
    rec = run_gpm(small_model, Objective("transfer_f1"), ctl, cfg, counter=counter)
    assert rec.status == "iteration_cap"
    assert len(rec.iterations) == 1
    assert rec.cauchy_optimization == 1
    assert rec.cauchy_diagnostics == 1
    assert counter.count == 2
    assert rec.final_residual is not None


def test_run_clips_infeasible_start(small_model):
    ctl = PConstControl(np.full((2, 8), 1e6))
    cfg = GpmConfig(form="1S", alpha=0.1, max_iters=1, compute_final_residual=False)
    rec = run_gpm(small_model, Objective("transfer_f1"), ctl, cfg)
    assert rec.final_control.feasible(small_model.envelopes)


def test_run_divergence_guard(small_model, rng):
    # a destabilizing step size produces an objective increase quickly; with
    # patience 1 the first increase flags the run as diverged
    values = random_feasible_values(small_model, rng)
    cfg = GpmConfig(form="1S", alpha=500.0, max_iters=200, divergence_patience=1,
                    compute_final_residual=False)
    rec = run_gpm(small_model, Objective("transfer_f1"), PConstControl(values), cfg)
    assert rec.status == "diverged"
    assert "divergence guard" in rec.stop_rule
    assert rec.iterations[-1].value > rec.iterations[-2].value


def test_step_scaling_rejects_unknown_mode():
    with pytest.raises(InputError):
        GpmConfig(form="1S", alpha=1.0, step_scaling="nodes")


def test_step_scaling_modes_agree_on_uniform_grid(small_model, rng):
    # on a uniform grid the density step equals the vector step with alpha
    # rescaled by M / T, so both runs trace the same iterates
    values = 0.3 * random_feasible_values(small_model, rng)
    obj = Objective("transfer_f1")
    m_over_t = small_model.n_intervals / small_model.grid.t_final
    rec_d = run_gpm(
        small_model, obj, PConstControl(values.copy()),
        GpmConfig(form="2S", alpha=0.2, beta=0.5, max_iters=6,
                  step_scaling="density", compute_final_residual=False),
    )
    rec_v = run_gpm(
        small_model, obj, PConstControl(values.copy()),
        GpmConfig(form="2S", alpha=0.2 * m_over_t, beta=0.5, max_iters=6,
                  step_scaling="vector", compute_final_residual=False),
    )
    np.testing.assert_allclose(rec_d.final_control.values,
                               rec_v.final_control.values, rtol=1e-10, atol=1e-13)


def test_forms_share_first_step(small_model, rng):
    # from the same start all three forms take an identical first step
    values = 0.5 * random_feasible_values(small_model, rng)
    obj = Objective("transfer_f1")
    recs = []
    for form, beta, gamma in (("1S", 0.0, 0.0), ("2S", 0.9, 0.0), ("3S", 0.9, 0.05)):
        cfg = GpmConfig(form=form, alpha=0.4, beta=beta, gamma=gamma, max_iters=1,
                        compute_final_residual=False)
        recs.append(run_gpm(small_model, obj, PConstControl(values.copy()), cfg))
    base = recs[0].final_control.values
    for rec in recs[1:]:
        np.testing.assert_array_equal(rec.final_control.values, base)
