"""Implicit truncated time stepping for the SKT cross-diffusion system, with
runtime checks of its ellipticity, positivity, energy and absorbing-ball
inequalities."""
from .coefficients import (Coefficients, EllipticityReport, check_admissibility,
                           diffusion_matrix, flux_potential, reaction_terms, truncate)
from .grid import Grid, State, laplacian, divergence_form_apply, norms, weighted_dissipation
from .stepper import SchemeConfig, StepReport, Trajectory, residual, step, run
from .diagnostics import (EnergyLedger, GronwallInput, accumulate_bounds, check_step_energy,
                          constant_K1, discrete_gronwall, grad_p_monitor)
from .attractor import (AbsorbingBall, EnsembleResult, absorbing_constants, check_envelope,
                        ensemble, entry_time)

__version__ = "0.1.0"

__all__ = [
    "Coefficients", "EllipticityReport", "check_admissibility", "diffusion_matrix",
    "flux_potential", "reaction_terms", "truncate",
    "Grid", "State", "laplacian", "divergence_form_apply", "norms", "weighted_dissipation",
    "SchemeConfig", "StepReport", "Trajectory", "residual", "step", "run",
    "EnergyLedger", "GronwallInput", "accumulate_bounds", "check_step_energy", "constant_K1",
    "discrete_gronwall", "grad_p_monitor",
    "AbsorbingBall", "EnsembleResult", "absorbing_constants", "check_envelope", "ensemble",
    "entry_time",
]
