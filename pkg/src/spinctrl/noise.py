"""Monte Carlo robustness of a fixed control against additive control noise.

Every run draws i.i.d. samples n_{l,j} ~ Normal(0, sigma), adds them to the
piecewise-constant base control (no clamping unless requested), propagates on
the unit grid with the fixed generator scale T, and records the resulting
final infidelity W = 1 - |<psig, psi(1)>|^2.  Per-run RNG streams are derived
from the study seed and the (sigma, run) index pair, so results do not depend
on execution order.  Each run counts as one solved Cauchy problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controls import PConstControl, project_box
from .errors import InputError
from .model import ChainModel
from .objectives import infidelity
from .propagator import CauchyCounter, propagate_forward

__all__ = ["NoiseStudyConfig", "SigmaStats", "NoiseStudyResult", "noise_study"]

CSV_COLUMNS = ("sigma", "min_Y", "max_Y", "min_W", "max_W", "mean_W", "median_W")


@dataclass(frozen=True)
class NoiseStudyConfig:
    sigmas: tuple[float, ...] = (0.05, 0.1, 0.15, 0.2)
    runs_per_sigma: int = 1000
    rng_seed: int = 0
    clamp_to_envelopes: bool = False

    def __post_init__(self) -> None:
        if len(self.sigmas) == 0:
            raise InputError("sigmas must not be empty")
        if any(s < 0 or not np.isfinite(s) for s in self.sigmas):
            raise InputError("sigma levels must be finite and non-negative")
        if self.runs_per_sigma < 1:
            raise InputError("runs_per_sigma must be >= 1")


@dataclass
class SigmaStats:
    """Summary of one noise level: pooled noise extremes and W statistics."""

    sigma: float
    min_y: float
    max_y: float
    min_w: float
    max_w: float
    mean_w: float
    median_w: float

    def as_row(self) -> tuple[float, ...]:
        return (self.sigma, self.min_y, self.max_y, self.min_w, self.max_w,
                self.mean_w, self.median_w)


@dataclass
class NoiseStudyResult:
    stats: list[SigmaStats]
    baseline_w: float
    w_samples: dict[float, np.ndarray]


def noise_study(
    model: ChainModel,
    base_control: PConstControl,
    t_scale: float,
    config: NoiseStudyConfig,
    *,
    counter: CauchyCounter | None = None,
) -> NoiseStudyResult:
    """Run the sigma ladder and summarize; see the module docstring."""
    if base_control.n_intervals != model.n_intervals:
        raise InputError("base control does not match the model grid")
    base = np.asarray(base_control.values)
    baseline_sweep = propagate_forward(model, base, scale=t_scale, with_midpoints=False)
    baseline_w = infidelity(baseline_sweep.nodes[-1], model.psig)

    stats: list[SigmaStats] = []
    samples: dict[float, np.ndarray] = {}
    for si, sigma in enumerate(config.sigmas):
        w_vals = np.empty(config.runs_per_sigma)
        min_y, max_y = np.inf, -np.inf
        for run in range(config.runs_per_sigma):
            seq = np.random.SeedSequence(entropy=config.rng_seed, spawn_key=(si, run))
            rng = np.random.default_rng(seq)
            noise = rng.normal(0.0, sigma, size=base.shape)
            min_y = min(min_y, float(noise.min()))
            max_y = max(max_y, float(noise.max()))
            noised = base + noise
            if config.clamp_to_envelopes:
                noised = project_box(noised, model.envelopes)
            sweep = propagate_forward(model, noised, scale=t_scale,
                                      with_midpoints=False, counter=counter)
            w_vals[run] = infidelity(sweep.nodes[-1], model.psig)
        stats.append(
            SigmaStats(
                sigma=float(sigma),
                min_y=min_y,
                max_y=max_y,
                min_w=float(np.min(w_vals)),
                max_w=float(np.max(w_vals)),
                mean_w=float(np.mean(w_vals)),
                median_w=float(np.median(w_vals)),
            )
        )
        samples[float(sigma)] = w_vals
    return NoiseStudyResult(stats=stats, baseline_w=baseline_w, w_samples=samples)
