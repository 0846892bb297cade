"""Propagation engine checks against closed forms and the extended-precision chain."""

from __future__ import annotations

import numpy as np
import pytest

from spinctrl.errors import InputError, ModelValidationError
from spinctrl.model import default_chain_model, xx_chain_hamiltonian
from spinctrl.propagator import CauchyCounter, hermitian_expm_apply, propagate_forward

from conftest import chain_nodes_ld, expm_ld, random_feasible_values


def test_expm_zero_hamiltonian_is_identity():
    h = np.zeros((4, 4))
    v = np.array([0.5, -0.5j, 0.5, 0.5j])
    out = hermitian_expm_apply(h, 2.7, v)
    np.testing.assert_allclose(out, v, atol=1e-15)


def test_expm_two_level_closed_form():
    # exp(-i X t) (1, 0)^T = (cos t, -i sin t)^T
    h = np.array([[0.0, 1.0], [1.0, 0.0]])
    for t in (0.3, 1.0, np.pi / 2, 4.0):
        out = hermitian_expm_apply(h, t, np.array([1.0, 0.0]))
        np.testing.assert_allclose(out, [np.cos(t), -1j * np.sin(t)], atol=1e-14)


def test_expm_unitary_on_random_hermitian(rng):
    for _ in range(50):
        n = int(rng.integers(2, 6))
        raw = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = 0.5 * (raw + raw.conj().T)
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        v /= np.linalg.norm(v)
        out = hermitian_expm_apply(h, float(rng.uniform(0.1, 3.0)), v)
        assert abs(np.linalg.norm(out) - 1.0) < 1e-12


def test_expm_matches_taylor_oracle(rng):
    for _ in range(10):
        raw = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        h = 0.5 * (raw + raw.conj().T)
        t = float(rng.uniform(0.2, 2.0))
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        expected = (expm_ld(h, t) @ v.astype(np.clongdouble)).astype(complex)
        out = hermitian_expm_apply(h, t, v)
        np.testing.assert_allclose(out, expected, atol=1e-13)


def test_expm_rejects_non_hermitian():
    h = np.array([[0.0, 1.0], [0.5, 0.0]])
    with pytest.raises(ModelValidationError):
        hermitian_expm_apply(h, 1.0, np.array([1.0, 0.0]))


def test_expm_rejects_non_finite():
    h = np.array([[np.nan, 0.0], [0.0, 0.0]])
    with pytest.raises(InputError):
        hermitian_expm_apply(h, 1.0, np.array([1.0, 0.0]))
    with pytest.raises(InputError):
        hermitian_expm_apply(np.zeros((2, 2)), 1.0, np.array([np.inf, 0.0]))


def test_constant_control_matches_single_exponential():
    # constant Hamiltonian: the chained sweep must agree with one exponential per node
    model = default_chain_model(2, 2.0, 64, b_bar=(1.5, 1.5), flat_bounds=True)
    values = np.vstack([np.full(64, 0.7), np.full(64, -1.1)])
    sweep = propagate_forward(model, values)
    h = model.h0 + 0.7 * model.v_ops[0] + (-1.1) * model.v_ops[1]
    for j, t in enumerate(model.grid.nodes):
        expected = hermitian_expm_apply(h, float(t), model.psi0)
        assert np.max(np.abs(sweep.nodes[j] - expected)) < 1e-10


def test_two_level_rabi_closed_form_nodes():
    # H = X, psi0 = e1: |<e2, psi(t)>|^2 = sin(t)^2
    model = default_chain_model(2, 1.0, 32, b_bar=(1.0, 1.0), flat_bounds=True)
    sweep = propagate_forward(model, np.zeros((2, 32)))
    pops = np.abs(sweep.nodes[:, 1]) ** 2
    np.testing.assert_allclose(pops, np.sin(model.grid.nodes) ** 2, atol=1e-12)


def test_node_unitarity_random_controls(rng, small_model):
    for _ in range(20):
        values = random_feasible_values(small_model, rng)
        sweep = propagate_forward(small_model, values)
        assert sweep.norm_drift < 1e-12
        mid_norms = np.linalg.norm(sweep.mids, axis=1)
        assert np.max(np.abs(mid_norms - 1.0)) < 1e-12


def test_half_step_composition(rng, small_model):
    values = random_feasible_values(small_model, rng)
    sweep = propagate_forward(small_model, values)
    dts = small_model.grid.dts
    for j in range(small_model.n_intervals):
        h = (
            small_model.h0
            + small_model.sigma[j]
            * (values[0, j] * small_model.v_ops[0] + values[1, j] * small_model.v_ops[1])
        )
        mid = hermitian_expm_apply(h, dts[j] / 2.0, sweep.nodes[j])
        assert np.max(np.abs(mid - sweep.mids[j])) < 1e-12
        full = hermitian_expm_apply(h, dts[j] / 2.0, mid)
        assert np.max(np.abs(full - sweep.nodes[j + 1])) < 1e-12


def test_sweep_matches_extended_precision_chain(rng, small_model):
    values = random_feasible_values(small_model, rng)
    sweep = propagate_forward(small_model, values)
    expected = chain_nodes_ld(small_model, values).astype(complex)
    assert np.max(np.abs(sweep.nodes - expected)) < 1e-12


def test_generator_scale_equals_stretched_grid(rng):
    # exp(-i (T H) dtau) must equal exp(-i H (T dtau))
    t_final = 17.0
    tau_model = default_chain_model(3, 1.0, 40, b_bar=(2.0, 2.0), flat_bounds=True)
    phys_model = default_chain_model(3, t_final, 40, b_bar=(2.0, 2.0), flat_bounds=True)
    values = random_feasible_values(tau_model, rng)
    scaled = propagate_forward(tau_model, values, scale=t_final)
    direct = propagate_forward(phys_model, values)
    assert np.max(np.abs(scaled.nodes - direct.nodes)) < 1e-12


def test_counter_counts_one_per_sweep(small_model):
    counter = CauchyCounter()
    values = np.zeros((2, small_model.n_intervals))
    propagate_forward(small_model, values, counter=counter)
    propagate_forward(small_model, values, counter=counter)
    assert counter.count == 2


def test_rejects_bad_scale(small_model):
    values = np.zeros((2, small_model.n_intervals))
    with pytest.raises(InputError):
        propagate_forward(small_model, values, scale=0.0)
    with pytest.raises(InputError):
        propagate_forward(small_model, values, scale=float("nan"))


def test_xx_chain_spectrum_closed_form():
    # eigenvalues of the N-site hopping chain: 2 J cos(k pi / (N+1))
    for n, coupling in ((3, 1.0), (5, 0.7)):
        h0 = xx_chain_hamiltonian(n, coupling)
        expected = np.sort(2.0 * coupling * np.cos(np.arange(1, n + 1) * np.pi / (n + 1)))
        np.testing.assert_allclose(np.linalg.eigvalsh(h0), expected, atol=1e-12)
