"""Shared test oracles.

The gradient oracle differentiates the objectives by central finite
differences computed in 80-bit extended precision.  The propagation route is
independent of the package implementation: per-interval matrix exponentials
come from a Taylor series with scaling and squaring on ``np.clongdouble``
instead of an eigendecomposition, and the chain is an explicit matvec loop.
With step 1e-6 the float64 rounding floor of a central difference sits near
1e-9, right at the tolerance the master gradient check needs, so the oracle
itself must be cleaner than that; extended precision pushes its error to
about 1e-12.
"""

from __future__ import annotations

import sys

import numpy as np
import pytest

from spinctrl.model import ChainModel, default_chain_model


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print the one-line-per-criterion verdicts of the acceptance suite."""
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None) if mod else None
    if not results or all(status == "NOT RUN" for status, _, _ in results.values()):
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        status, label, detail = results[num]
        line = f"criterion {num} ({label}): {status}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)

LD = np.longdouble
CLD = np.clongdouble


def expm_ld(h: np.ndarray, factor: complex) -> np.ndarray:
    """exp(-1j * factor * h) on clongdouble via Taylor + scaling and squaring."""
    a = np.asarray(h, dtype=CLD) * CLD(-1j * factor)
    norm = float(np.max(np.sum(np.abs(a), axis=1)))
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-30)))) + 1)
    a = a / CLD(2**squarings)
    out = np.eye(a.shape[0], dtype=CLD)
    term = np.eye(a.shape[0], dtype=CLD)
    for k in range(1, 24):
        term = term @ a / CLD(k)
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def interval_h_ld(model: ChainModel, c_pair: np.ndarray, j: int) -> np.ndarray:
    h0 = np.asarray(model.h0, dtype=CLD)
    v1 = np.asarray(model.v_ops[0], dtype=CLD)
    v2 = np.asarray(model.v_ops[1], dtype=CLD)
    s = LD(model.sigma[j])
    return h0 + s * (LD(c_pair[0]) * v1 + LD(c_pair[1]) * v2)


def chain_nodes_ld(model: ChainModel, values: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Node states from the extended-precision chain, shape (M+1, N)."""
    m = model.n_intervals
    dts = np.asarray(model.grid.dts, dtype=LD)
    psi = np.asarray(model.psi0, dtype=CLD)
    nodes = [psi]
    for j in range(m):
        p = expm_ld(interval_h_ld(model, values[:, j], j), LD(scale) * dts[j])
        psi = p @ psi
        nodes.append(psi)
    return np.array(nodes)


def _objective_value_ld(model, values, nodes, p_u, p_psi) -> np.longdouble:
    psig = np.asarray(model.psig, dtype=CLD)
    overlaps = nodes @ psig.conj()
    infs = LD(1.0) - np.abs(overlaps) ** 2
    value = infs[-1]
    if p_psi is not None:
        weights = np.asarray(model.grid.trapezoid_weights, dtype=LD)
        value = value + LD(p_psi) * np.dot(weights, infs)
    dts = np.asarray(model.grid.dts, dtype=LD)
    for l in range(2):
        if p_u[l] != 0.0:
            shapes = np.asarray(model.shapes[l], dtype=LD)
            value = value + LD(p_u[l]) * np.sum(dts * shapes * np.asarray(values[l], dtype=LD) ** 2)
    return value


def fd_gradient_ld(
    model: ChainModel,
    values: np.ndarray,
    p_u=(0.0, 0.0),
    p_psi=None,
    h: float = 1e-6,
    scale: float = 1.0,
) -> np.ndarray:
    """Central finite differences of f1 (p_psi None) or f2, extended precision.

    Base interval propagators are cached; each perturbed evaluation rebuilds
    only the touched interval's exponential and replays the chain.
    """
    m = model.n_intervals
    dts = np.asarray(model.grid.dts, dtype=LD)
    hs = LD(h)
    base_props = [
        expm_ld(interval_h_ld(model, values[:, j], j), LD(scale) * dts[j]) for j in range(m)
    ]
    psi0 = np.asarray(model.psi0, dtype=CLD)

    def chain_with(j: int, prop_j: np.ndarray) -> np.ndarray:
        psi = psi0
        nodes = [psi]
        for k in range(m):
            psi = (prop_j if k == j else base_props[k]) @ psi
            nodes.append(psi)
        return np.array(nodes)

    grad = np.empty(2 * m)
    for l in range(2):
        for j in range(m):
            vals = []
            for sign in (1.0, -1.0):
                pert = np.asarray(values, dtype=LD).copy()
                pert[l, j] = pert[l, j] + LD(sign) * hs
                prop = expm_ld(interval_h_ld(model, pert[:, j], j), LD(scale) * dts[j])
                nodes = chain_with(j, prop)
                vals.append(_objective_value_ld(model, pert, nodes, p_u, p_psi))
            grad[l * m + j] = float((vals[0] - vals[1]) / (2 * hs))
    return grad


def random_feasible_values(model: ChainModel, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw strictly inside the envelope box."""
    return rng.uniform(-1.0, 1.0, size=(2, model.n_intervals)) * model.envelopes


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)


@pytest.fixture
def small_model():
    """N = 3 transfer model, flat bounds so random controls can exercise the whole box."""
    return default_chain_model(3, 1.2, 8, b_bar=(5.0, 3.0), flat_bounds=True, shape_const=(25.0, 25.0))
