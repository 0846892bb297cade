"""Control representations: piecewise-constant vectors and the sinusoidal class.

A piecewise-constant control holds one value per channel per grid interval,
``values[l, j] = c_{l, j+1}``; flattening row-major gives the optimization
vector a in R^(2M).  The feasible set is the box |c_{l,j}| <= nu_{l,j} given
by the model envelopes.

The sinusoidal class used by the genetic search is
``u_l(t) = sum_i gamma_{l,i} * sin(omega_{l,i} * t)``, sampled at interval
midpoints and clamped to the envelopes.  With a free final time T the class is
carried to the unit grid by t = T * tau, which moves T into the generator as a
multiplicative scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .model import ChainModel, TimeGrid

__all__ = [
    "PConstControl",
    "project_box",
    "SinClassParams",
    "sample_sin_class",
    "rescale_free_time",
    "trapezoid_profile_control",
]


@dataclass(frozen=True)
class PConstControl:
    """Two-channel piecewise-constant control on a grid with M intervals."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != 2:
            raise InputError(f"control values must have shape (2, M), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InputError("control values contain non-finite entries")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_intervals(self) -> int:
        return self.values.shape[1]

    def as_vector(self) -> np.ndarray:
        """Flatten to a in R^(2M), channel-major."""
        return self.values.ravel().copy()

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_intervals: int) -> "PConstControl":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (2 * n_intervals,):
            raise InputError(f"vector must have shape ({2 * n_intervals},), got {vec.shape}")
        return cls(vec.reshape(2, n_intervals))

    def projected(self, envelopes: np.ndarray) -> "PConstControl":
        return PConstControl(project_box(self.values, envelopes))

    def feasible(self, envelopes: np.ndarray, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.values) <= np.asarray(envelopes) + tol))

    def __neg__(self) -> "PConstControl":
        return PConstControl(-self.values)


def project_box(values: np.ndarray, envelopes: np.ndarray) -> np.ndarray:
    """Componentwise projection onto the box |c_{l,j}| <= nu_{l,j}."""
    values = np.asarray(values, dtype=float)
    envelopes = np.asarray(envelopes, dtype=float)
    if values.shape != envelopes.shape:
        raise InputError(f"shape mismatch: values {values.shape} vs envelopes {envelopes.shape}")
    return np.clip(values, -envelopes, envelopes)


@dataclass(frozen=True)
class SinClassParams:
    """Amplitudes and frequencies of the sinusoidal control class.

    ``gamma`` and ``omega`` have shape (2, m_sin).  ``t_final`` is set only for
    the free-final-time variant, where it is an extra search coordinate.
    """

    gamma: np.ndarray
    omega: np.ndarray
    t_final: float | None = None

    def __post_init__(self) -> None:
        gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        omega = np.atleast_2d(np.asarray(self.omega, dtype=float))
        if gamma.shape != omega.shape or gamma.shape[0] != 2 or gamma.shape[1] < 1:
            raise InputError(
                f"gamma and omega must share shape (2, m_sin), got {gamma.shape} and {omega.shape}"
            )
        if not (np.all(np.isfinite(gamma)) and np.all(np.isfinite(omega))):
            raise InputError("sinusoidal class parameters contain non-finite entries")
        if self.t_final is not None and not (np.isfinite(self.t_final) and self.t_final > 0):
            raise InputError(f"t_final must be positive, got {self.t_final!r}")
        gamma.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "omega", omega)

    @property
    def m_sin(self) -> int:
        return self.gamma.shape[1]

    def as_vector(self) -> np.ndarray:
        """Genome layout: gamma row-major, then omega row-major, then T when free."""
        parts = [self.gamma.ravel(), self.omega.ravel()]
        if self.t_final is not None:
            parts.append(np.array([self.t_final]))
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, vec: np.ndarray, m_sin: int, with_time: bool = False) -> "SinClassParams":
        vec = np.asarray(vec, dtype=float)
        want = 4 * m_sin + (1 if with_time else 0)
        if vec.shape != (want,):
            raise InputError(f"vector must have shape ({want},), got {vec.shape}")
        gamma = vec[: 2 * m_sin].reshape(2, m_sin)
        omega = vec[2 * m_sin : 4 * m_sin].reshape(2, m_sin)
        return cls(gamma, omega, float(vec[-1]) if with_time else None)


def _evaluate_sin_class(params: SinClassParams, times: np.ndarray) -> np.ndarray:
    # (2, K) x (K, Mt) summed over the sinusoid index
    phases = np.sin(params.omega[:, :, None] * times[None, None, :])
    return np.einsum("lk,lkt->lt", params.gamma, phases)


def sample_sin_class(params: SinClassParams, model: ChainModel) -> PConstControl:
    """Sample the class at interval midpoints of the model grid, clamped to envelopes."""
    raw = _evaluate_sin_class(params, model.grid.midpoints)
    return PConstControl(project_box(raw, model.envelopes))


def rescale_free_time(
    params: SinClassParams, grid_tau: TimeGrid, envelopes: np.ndarray | None = None
) -> tuple[float, PConstControl]:
    """Carry a free-time class member to the unit grid.

    Returns the generator scale T and the control sampled at physical times
    t = T * taubar_j, clamped to ``envelopes`` when given.  ``grid_tau`` must
    span [0, 1].
    """
    if params.t_final is None:
        raise InputError("params.t_final is required for the free-time rescaling")
    if abs(grid_tau.t_final - 1.0) > 1e-12:
        raise InputError(f"grid_tau must span [0, 1], got t_final = {grid_tau.t_final!r}")
    t_final = float(params.t_final)
    raw = _evaluate_sin_class(params, t_final * grid_tau.midpoints)
    if envelopes is not None:
        raw = project_box(raw, envelopes)
    return t_final, PConstControl(raw)


def trapezoid_profile_control(
    grid: TimeGrid,
    envelopes: np.ndarray,
    knot_fractions: tuple[float, float, float, float] = (0.1, 0.2, 0.8, 0.9),
    shoulder_levels: tuple[tuple[float, float], tuple[float, float]] = ((-0.2, -0.2), (-0.2, 0.2)),
    baselines: tuple[float, float] = (-0.1, 0.0),
    mirrored: bool = False,
) -> PConstControl:
    """Smooth two-channel trapezoid-profile starting guess for transfer runs.

    Channel l ramps from its baseline y_l to a left shoulder level over
    [that_1, that_2], crosses linearly to a right shoulder level by that_3, and
    ramps back to the baseline over [that_3, that_4]; knots are fractions of
    the horizon.  ``mirrored`` negates the whole profile.  Values are sampled
    at interval midpoints and clamped to the envelopes.
    """
    f1, f2, f3, f4 = knot_fractions
    if not 0.0 <= f1 < f2 < f3 < f4 <= 1.0:
        raise InputError(f"knot fractions must increase within [0, 1], got {knot_fractions}")
    t = grid.t_final
    rows = []
    for (left, right), base in zip(shoulder_levels, baselines):
        xp = np.array([0.0, f1 * t, f2 * t, f3 * t, f4 * t, t])
        fp = np.array([base, base, left, right, base, base])
        rows.append(np.interp(grid.midpoints, xp, fp))
    values = np.vstack(rows)
    if mirrored:
        values = -values
    return PConstControl(project_box(values, np.asarray(envelopes)))
