"""Spin-chain model data: time grid, Hamiltonians, control operators, envelopes.

The controlled system is an N-level chain in the single-excitation sector,

    dpsi/dt = -i (H0 + sigma(t) * (u1(t) V1 + u2(t) V2)) psi,

with piecewise-constant controls u_l held fixed on each grid interval.  All
operators are Hermitian N x N matrices; states are unit complex N-vectors.
The inner product convention throughout the package is
``<a, b> = sum_m conj(a_m) b_m`` (``numpy.vdot``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ModelValidationError

HERMITIAN_TOL = 1e-12
UNIT_NORM_TOL = 1e-9

__all__ = [
    "TimeGrid",
    "ChainModel",
    "xx_chain_hamiltonian",
    "end_site_projectors",
    "basis_state",
    "sin_power_envelope",
    "flat_envelope",
    "control_hamiltonian",
    "interval_hamiltonians",
    "default_chain_model",
]


def _require_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")


def require_hermitian(mat: np.ndarray, name: str, tol: float = HERMITIAN_TOL) -> None:
    """Raise ModelValidationError when ``mat`` deviates from Hermitian by more than ``tol``."""
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {mat.shape}")
    _require_finite(mat, name)
    dev = np.max(np.abs(mat - mat.conj().T))
    if dev > tol:
        raise ModelValidationError(f"{name} is not Hermitian: max deviation {dev:.3e} > {tol:.1e}")


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing node times t_0 < t_1 < ... < t_M starting at 0."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise InputError("grid needs at least two node times")
        _require_finite(nodes, "grid nodes")
        if abs(nodes[0]) > 1e-15:
            raise InputError("grid must start at t = 0")
        if np.any(np.diff(nodes) <= 0):
            raise InputError("grid node times must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, t_final: float, n_intervals: int) -> "TimeGrid":
        if n_intervals < 1:
            raise InputError("n_intervals must be >= 1")
        if not (t_final > 0):
            raise InputError("t_final must be positive")
        return cls(np.linspace(0.0, float(t_final), n_intervals + 1))

    @property
    def n_intervals(self) -> int:
        return self.nodes.size - 1

    @property
    def t_final(self) -> float:
        return float(self.nodes[-1])

    @property
    def dts(self) -> np.ndarray:
        """Interval lengths dt_j, shape (M,)."""
        return np.diff(self.nodes)

    @property
    def midpoints(self) -> np.ndarray:
        """Interval midpoints, shape (M,)."""
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @property
    def trapezoid_weights(self) -> np.ndarray:
        """Node weights w_j of the trapezoid rule on this grid, shape (M+1,)."""
        dts = self.dts
        w = np.zeros(self.nodes.size)
        w[:-1] += 0.5 * dts
        w[1:] += 0.5 * dts
        return w


def xx_chain_hamiltonian(n_levels: int, coupling: float = 1.0) -> np.ndarray:
    """Free Hamiltonian of the chain: uniform nearest-neighbour hopping, zero diagonal."""
    if n_levels < 2:
        raise InputError("n_levels must be >= 2")
    h0 = np.zeros((n_levels, n_levels))
    idx = np.arange(n_levels - 1)
    h0[idx, idx + 1] = coupling
    h0[idx + 1, idx] = coupling
    return h0


def end_site_projectors(n_levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Control operators: local field on the first site and on the last site."""
    v1 = np.zeros((n_levels, n_levels))
    v2 = np.zeros((n_levels, n_levels))
    v1[0, 0] = 1.0
    v2[-1, -1] = 1.0
    return v1, v2


def basis_state(n_levels: int, site: int) -> np.ndarray:
    """Computational basis state |site>, 1-based site index."""
    if not 1 <= site <= n_levels:
        raise InputError(f"site must lie in 1..{n_levels}, got {site}")
    psi = np.zeros(n_levels, dtype=complex)
    psi[site - 1] = 1.0
    return psi


def sin_power_envelope(b_bar: float, q: int, grid: TimeGrid) -> np.ndarray:
    """Per-interval control bound nu_j = b_bar * sin(pi * tbar_j / T) ** q at midpoints."""
    if b_bar < 0:
        raise InputError("b_bar must be non-negative")
    if q <= 0 or q % 2 != 0:
        raise InputError("envelope exponent q must be a positive even integer")
    return b_bar * np.sin(np.pi * grid.midpoints / grid.t_final) ** q


def flat_envelope(b_bar: float, grid: TimeGrid) -> np.ndarray:
    """Constant control bound nu_j = b_bar on every interval."""
    if b_bar < 0:
        raise InputError("b_bar must be non-negative")
    return np.full(grid.n_intervals, float(b_bar))


@dataclass(frozen=True)
class ChainModel:
    """Immutable problem data for one control task.

    Attributes:
        grid: time grid carrying M intervals.
        h0: free Hamiltonian, Hermitian (N, N).
        v_ops: pair of Hermitian control coupling operators (V1, V2).
        sigma: switching weight per interval, shape (M,).
        envelopes: control bounds nu_{l,j} >= 0, shape (2, M).
        shapes: penalty shape weights S_{l,j} >= 0, shape (2, M).
        psi0: initial state, unit norm.
        psig: goal state, unit norm.
    """

    grid: TimeGrid
    h0: np.ndarray
    v_ops: tuple[np.ndarray, np.ndarray]
    sigma: np.ndarray
    envelopes: np.ndarray
    shapes: np.ndarray
    psi0: np.ndarray
    psig: np.ndarray
    real_symmetric: bool = field(init=False)

    def __post_init__(self) -> None:
        h0 = np.asarray(self.h0, dtype=None)
        require_hermitian(h0, "h0")
        n = h0.shape[0]
        if len(self.v_ops) != 2:
            raise InputError("v_ops must hold exactly two operators")
        v_ops = tuple(np.asarray(v) for v in self.v_ops)
        for l, v in enumerate(v_ops):
            require_hermitian(v, f"v_ops[{l}]")
            if v.shape != (n, n):
                raise ModelValidationError(f"v_ops[{l}] shape {v.shape} does not match h0 {h0.shape}")

        m = self.grid.n_intervals
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (m,):
            raise InputError(f"sigma must have shape ({m},), got {sigma.shape}")
        envelopes = np.asarray(self.envelopes, dtype=float)
        shapes = np.asarray(self.shapes, dtype=float)
        for name, arr in (("envelopes", envelopes), ("shapes", shapes)):
            if arr.shape != (2, m):
                raise InputError(f"{name} must have shape (2, {m}), got {arr.shape}")
            _require_finite(arr, name)
            if np.any(arr < 0):
                raise ModelValidationError(f"{name} must be non-negative")
        _require_finite(sigma, "sigma")

        states = []
        for name, psi in (("psi0", self.psi0), ("psig", self.psig)):
            psi = np.asarray(psi, dtype=complex)
            if psi.shape != (n,):
                raise InputError(f"{name} must have shape ({n},), got {psi.shape}")
            _require_finite(psi.view(float), name)
            nrm = np.linalg.norm(psi)
            if abs(nrm - 1.0) > UNIT_NORM_TOL:
                raise ModelValidationError(f"{name} must be unit norm, got ||{name}|| = {nrm!r}")
            states.append(psi / nrm)

        real = bool(
            np.isrealobj(h0) and all(np.isrealobj(v) for v in v_ops)
        )
        h0 = h0.astype(float if real else complex)

        for arr in (h0, *v_ops, sigma, envelopes, shapes, *states):
            arr.setflags(write=False)
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "v_ops", v_ops)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "envelopes", envelopes)
        object.__setattr__(self, "shapes", shapes)
        object.__setattr__(self, "psi0", states[0])
        object.__setattr__(self, "psig", states[1])
        object.__setattr__(self, "real_symmetric", real)

    @property
    def n_levels(self) -> int:
        return self.h0.shape[0]

    @property
    def n_intervals(self) -> int:
        return self.grid.n_intervals


def control_hamiltonian(model: ChainModel, c: np.ndarray, j: int) -> np.ndarray:
    """Control part H1 on interval j for the constant pair c = (c1, c2)."""
    c = np.asarray(c, dtype=float)
    if c.shape != (2,):
        raise InputError(f"c must be a pair, got shape {c.shape}")
    if not 0 <= j < model.n_intervals:
        raise InputError(f"interval index {j} out of range 0..{model.n_intervals - 1}")
    return model.sigma[j] * (c[0] * model.v_ops[0] + c[1] * model.v_ops[1])


def interval_hamiltonians(model: ChainModel, values: np.ndarray) -> np.ndarray:
    """Stack of total Hamiltonians H0 + H1(c_j) for all intervals, shape (M, N, N).

    ``values`` holds the piecewise-constant control, shape (2, M).  The result is
    float when the model is real-symmetric, complex otherwise.
    """
    values = np.asarray(values, dtype=float)
    m = model.n_intervals
    if values.shape != (2, m):
        raise InputError(f"control values must have shape (2, {m}), got {values.shape}")
    _require_finite(values, "control values")
    weights = model.sigma[:, None, None]
    stack = model.h0[None, :, :] + weights * (
        values[0][:, None, None] * model.v_ops[0][None, :, :]
        + values[1][:, None, None] * model.v_ops[1][None, :, :]
    )
    return stack


def default_chain_model(
    n_levels: int,
    t_final: float,
    n_intervals: int,
    *,
    coupling: float = 1.0,
    b_bar: tuple[float, float] = (5.0, 5.0),
    q: tuple[int, int] = (8, 8),
    shape_const: tuple[float, float] = (25.0, 25.0),
    psi0_site: int | None = None,
    psig_site: int | None = None,
    sigma_value: float = 1.0,
    flat_bounds: bool = False,
) -> ChainModel:
    """Build the default chain: XX coupling, end-site control fields, sin^q envelopes.

    Transfer default is psi0 = |1>, psig = |N>.  Pass explicit sites for other
    tasks (state keeping uses psi0_site = psig_site = n_levels).
    """
    grid = TimeGrid.uniform(t_final, n_intervals)
    if psi0_site is None:
        psi0_site = 1
    if psig_site is None:
        psig_site = n_levels
    if flat_bounds:
        env = np.vstack([flat_envelope(b_bar[0], grid), flat_envelope(b_bar[1], grid)])
    else:
        env = np.vstack(
            [sin_power_envelope(b_bar[0], q[0], grid), sin_power_envelope(b_bar[1], q[1], grid)]
        )
    shapes = np.vstack(
        [np.full(grid.n_intervals, float(shape_const[0])), np.full(grid.n_intervals, float(shape_const[1]))]
    )
    return ChainModel(
        grid=grid,
        h0=xx_chain_hamiltonian(n_levels, coupling),
        v_ops=end_site_projectors(n_levels),
        sigma=np.full(grid.n_intervals, float(sigma_value)),
        envelopes=env,
        shapes=shapes,
        psi0=basis_state(n_levels, psi0_site),
        psig=basis_state(n_levels, psig_site),
    )
