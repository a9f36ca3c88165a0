"""Simulation of a two-level atom and a cavity mode under modulated parameters."""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainError,
    GuardViolation,
    InvalidDimensionError,
    NCQEDError,
    NonHermitianError,
    NumericalBlowupError,
    OutOfRangeError,
    ResonantRegimeError,
    TruncationError,
    UnsupportedModelError,
)
from .hilbert import DrivenOperator, Operators, coherent_state, fock_state, make_state, tensor  # noqa: E402
from .model import ModulationSpec, SystemParams, derive_params, lab_hamiltonian, interaction_hamiltonian  # noqa: E402
from .solver import IntegratorConfig, evolve, expm_oracle, evolve_piecewise_constant  # noqa: E402
from .effective import ResonanceChoice, build_effective, resonance_frequency, rate_report  # noqa: E402
from .observables import measure, analytic_resonant_ajc  # noqa: E402

__all__ = [
    "ConfigError", "DomainError", "GuardViolation", "InvalidDimensionError", "NCQEDError",
    "NonHermitianError", "NumericalBlowupError", "OutOfRangeError", "ResonantRegimeError",
    "TruncationError", "UnsupportedModelError",
    "DrivenOperator", "Operators", "coherent_state", "fock_state", "make_state", "tensor",
    "ModulationSpec", "SystemParams", "derive_params", "lab_hamiltonian", "interaction_hamiltonian",
    "IntegratorConfig", "evolve", "expm_oracle", "evolve_piecewise_constant",
    "ResonanceChoice", "build_effective", "resonance_frequency", "rate_report",
    "measure", "analytic_resonant_ajc",
]
