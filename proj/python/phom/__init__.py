"""Passive tracers in locally stationary random flows."""

from ._core import (
    Config,
    EffectiveModel,
    ModeSet,
    Profile,
    build_effective_model,
    corrector,
    effective_coefficients,
    frame_velocity,
    galerkin_corrector,
    run_averaging_check,
    run_convergence,
    run_corrector_probes,
    run_passive_scalar,
    sample_invariant,
    simulate,
    simulate_limit,
    sliced_wasserstein1,
    solve_backward_pde,
    wasserstein1,
)

__version__ = "0.1.0"
