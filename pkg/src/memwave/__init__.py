"""Numerical laboratory for strongly coupled waves with one fractional-power
infinite-memory damping term: per-mode spectra, resolvent sweeps, exact time
evolution, and decay-rate/optimality verdicts."""

from .analysis import (
    DecayFit,
    OptimalityVerdict,
    fit_decay_exponent,
    optimality_check,
    superposition_oracle,
    target_exponent,
)
from .model import (
    AuxiliaryI,
    ConstantEta,
    DirichletLaplacianGrid,
    EnergyBreakdown,
    EtaOnNodes,
    ExplicitGrid,
    ExponentialKernel,
    InvalidModelError,
    ModalState,
    ModelParams,
    TabulatedKernel,
    energy,
    graph_norm,
    kernel_mass,
    validate_params,
)
from .resolvent import (
    LaguerreGrid,
    ModalForcing,
    ModeBlock,
    ResolventSweeper,
    SweepResult,
    laguerre_grid,
    mode_block,
    resolvent_norm,
    scaled_sweep,
    static_solve,
)
from .spectral import (
    AsymptoticConstants,
    CharPoly,
    SpectrumBranch,
    asymptotic_eigenvalues,
    cardano_cubic_roots,
    modal_generator,
    quintic_coeffs,
    quintic_roots,
    sharpness_limit,
    sharpness_product,
    strip_check,
)
from .timedomain import (
    EnergyTrace,
    ExponentialPolyHistory,
    HistoryTerm,
    ModalTrajectory,
    ZeroHistory,
    energy_trace,
    evolve_general_kernel,
    exact_modal_evolve,
    marginal_initial_data,
    memory_energy_closed_form,
    single_mode_data,
)

__version__ = "0.1.0"
