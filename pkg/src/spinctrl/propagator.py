"""Matrix-exponential propagation of the controlled Schrodinger equation.

Each grid interval carries a constant Hamiltonian H_j, so the exact step is
``psi(t_{j+1}) = exp(-i * H_j * dt_j) psi(t_j)``.  Exponentials are applied
through the Hermitian eigendecomposition of H_j, which keeps every step
unitary to rounding and yields the interval eigenbases reused by the adjoint
sweeps and gradient assembly.  One forward sweep produces the states at all
nodes and all interval midpoints and counts as one solved Cauchy problem.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .model import ChainModel, interval_hamiltonians, require_hermitian

__all__ = [
    "CauchyCounter",
    "hermitian_expm_apply",
    "ForwardSweep",
    "propagate_forward",
]


class CauchyCounter:
    """Thread-safe tally of solved Cauchy problems (complexity ledger)."""

    def __init__(self) -> None:
        self._count = 0
        self._lock = threading.Lock()

    def add(self, n: int = 1) -> None:
        with self._lock:
            self._count += n

    @property
    def count(self) -> int:
        return self._count

    def __repr__(self) -> str:
        return f"CauchyCounter(count={self._count})"


def hermitian_expm_apply(h: np.ndarray, scale: complex, vec: np.ndarray) -> np.ndarray:
    """Return ``exp(-1j * scale * h) @ vec`` for Hermitian ``h``.

    For real ``scale`` the map is unitary.  ``h`` is validated; a deviation
    from Hermitian symmetry beyond 1e-12 raises ModelValidationError and
    non-finite input raises InputError.
    """
    h = np.asarray(h)
    require_hermitian(h, "h")
    vec = np.asarray(vec, dtype=complex)
    if vec.shape != (h.shape[0],):
        raise InputError(f"vec must have shape ({h.shape[0]},), got {vec.shape}")
    if not np.all(np.isfinite(vec.view(float))):
        raise InputError("vec contains non-finite entries")
    if not np.isfinite(complex(scale)):
        raise InputError("scale must be finite")
    if np.isrealobj(h):
        h = h.astype(float)
    evals, evecs = np.linalg.eigh(h)
    phases = np.exp(-1j * complex(scale) * evals)
    return evecs @ (phases * (evecs.conj().T @ vec))


@dataclass
class ForwardSweep:
    """States and per-interval eigendata from one forward propagation.

    Attributes:
        nodes: psi(t_j) for j = 0..M, shape (M+1, N).
        mids: psi at interval midpoints, shape (M, N).
        evals: interval Hamiltonian eigenvalues, shape (M, N).
        evecs: interval eigenvector matrices, shape (M, N, N), real or complex.
        half_phases: exp(-1j * scale * evals * dt_j / 2), shape (M, N).
        scale: generator scale (1 for physical-time grids, T for rescaled runs).
    """

    nodes: np.ndarray
    mids: np.ndarray
    evals: np.ndarray
    evecs: np.ndarray
    half_phases: np.ndarray
    scale: float

    @property
    def norm_drift(self) -> float:
        """Largest node-norm deviation from 1 accumulated over the sweep."""
        return float(np.max(np.abs(np.linalg.norm(self.nodes, axis=1) - 1.0)))

    def to_eigbasis(self, j: int, vec: np.ndarray) -> np.ndarray:
        v = self.evecs[j]
        return (v.conj().T if np.iscomplexobj(v) else v.T) @ vec

    def half_step_back(self, j: int, vec: np.ndarray) -> np.ndarray:
        """Apply exp(+1j * scale * H_j * dt_j / 2), the inverse half step."""
        return self.evecs[j] @ (self.half_phases[j].conj() * self.to_eigbasis(j, vec))


def propagate_forward(
    model: ChainModel,
    control,
    *,
    scale: float = 1.0,
    with_midpoints: bool = True,
    counter: CauchyCounter | None = None,
) -> ForwardSweep:
    """Propagate psi0 across all intervals of the model grid.

    ``control`` is a PConstControl or a raw (2, M) array of interval values.
    ``scale`` multiplies the generator; a rescaled free-time run on the unit
    grid passes its physical duration here.  Counts one Cauchy problem.
    """
    values = np.asarray(getattr(control, "values", control), dtype=float)
    if not (np.isfinite(scale) and scale > 0):
        raise InputError(f"scale must be positive and finite, got {scale!r}")
    stack = interval_hamiltonians(model, values)
    evals, evecs = np.linalg.eigh(stack)

    m, n = model.n_intervals, model.n_levels
    half_phases = np.exp(evals * (-0.5j * scale * model.grid.dts[:, None]))
    nodes = np.empty((m + 1, n), dtype=complex)
    mids = np.empty((m, n), dtype=complex) if with_midpoints else np.empty((0, n), dtype=complex)
    nodes[0] = model.psi0
    complex_basis = np.iscomplexobj(evecs)
    psi = nodes[0]
    for j in range(m):
        v = evecs[j]
        y = (v.conj().T if complex_basis else v.T) @ psi
        ph = half_phases[j]
        if with_midpoints:
            mids[j] = v @ (ph * y)
        psi = v @ ((ph * ph) * y)
        nodes[j + 1] = psi
    if counter is not None:
        counter.add(1)
    return ForwardSweep(
        nodes=nodes,
        mids=mids,
        evals=evals,
        evecs=evecs,
        half_phases=half_phases,
        scale=float(scale),
    )
