"""Optimal control of state transfer and keeping on spin chains.

Bounded piecewise-constant two-channel controls drive an N-level chain in the
single-excitation sector.  The package provides exact matrix-exponential
propagation, adjoint-state gradients, projected gradient methods with one to
three steps of memory, a real-coded genetic search over a sinusoidal control
class (optionally with a free final time), and a Monte Carlo noise-robustness
study, all wired to a config-driven command line runner.
"""

from .controls import (
    PConstControl,
    SinClassParams,
    project_box,
    rescale_free_time,
    sample_sin_class,
    trapezoid_profile_control,
)
from .errors import ConfigError, InputError, ModelValidationError, SpinCtrlError
from .ga import (
    GaConfig,
    GaRunRecord,
    MultiSeedGaResult,
    ga_free_time_transfer_preset,
    ga_keeping_preset,
    run_ga,
    run_ga_multi_seed,
)
from .gpm import (
    GpmConfig,
    GpmRunRecord,
    KeepingPair,
    ObjectiveBelow,
    StationarityBelow,
    gpm_step,
    run_gpm,
    stationarity_residual,
)
from .gradient import (
    TRANSVERSALITY_SCALE,
    adjoint_terminal_transfer,
    backward_sweep_keeping,
    backward_sweep_transfer,
    grad_f,
)
from .model import (
    ChainModel,
    TimeGrid,
    basis_state,
    control_hamiltonian,
    default_chain_model,
    end_site_projectors,
    flat_envelope,
    interval_hamiltonians,
    sin_power_envelope,
    xx_chain_hamiltonian,
)
from .noise import NoiseStudyConfig, NoiseStudyResult, SigmaStats, noise_study
from .objectives import (
    Objective,
    eval_f1,
    eval_f2,
    eval_free_time_f3,
    eval_keeping_f4,
    evaluate_objective,
    infidelity,
    node_infidelities,
)
from .propagator import CauchyCounter, ForwardSweep, hermitian_expm_apply, propagate_forward

__version__ = "0.1.0"
