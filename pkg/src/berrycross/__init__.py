"""Exact and effective-Hamiltonian dynamics of a driven two-level system near a level crossing."""

__version__ = "0.1.0"

from .connection import (
    ConnectionMatrix,
    LoopIntegral,
    berry_loop_integral,
    connection_analytic,
    connection_numeric,
    scaling_check,
)
from .errors import (
    BerryCrossError,
    ContractError,
    DegeneracyError,
    DomainError,
    IntegrationError,
    SingularityError,
    StencilError,
)
from .evolution import (
    EvolutionConfig,
    EvolutionResult,
    evolve_adiabatic,
    evolve_effective_b,
    evolve_effective_c,
    evolve_exact,
    evolve_fixed,
    to_basis,
    to_original,
)
from .kernels import BACKEND
from .model import (
    ParameterPath,
    PolarField,
    Spinor,
    TwoLevelHamiltonian,
    eigensystem,
    hamiltonian_at,
    to_polar,
)
from .phases import (
    PhaseDecomposition,
    decompose_phase,
    projected_amplitude,
    transition_probability,
)
from .scenarios import (
    FieldSweepModel,
    NoCrossingModel,
    SweepRecord,
    build_field_path,
    build_no_crossing_path,
    scenario_shrink_rotate_return,
    sweep_phase_map,
)
