"""Simulator for two parametrically pumped Kerr oscillators.

Computes time-resolved photon-number entanglement (qubit-qubit
negativities), detects sudden death and birth of entanglement, and
quantifies Cauchy-Schwartz inequality violation for closed, vacuum-damped
and thermal-damped dynamics on a truncated two-mode Fock space.
"""

from .closed import (
    ClosedTrajectory,
    IntegratorConfig,
    StepSizeError,
    amplitude_rhs,
    evolve_closed,
)
from .correlations import csi_parameter, gamma2
from .entanglement import (
    BoundaryCurves,
    EntanglementEvent,
    QubitPairReduced,
    QubitPairSpec,
    XFormError,
    border_ratio,
    detect_events,
    make_negativity_evaluator,
    negativity,
    negativity_signed,
    partial_transpose,
    project_qubit_pair,
    sweep_gamma_boundaries,
    xstate_eigenvalues,
    xstate_negativity,
)
from .fock import (
    SystemParams,
    TwoModeAmplitudes,
    TwoModeDensityMatrix,
    amplitudes_to_density,
    fidelity,
    make_vacuum_state,
    vacuum_density,
)
from .lindblad import (
    LindbladGenerator,
    OpenTrajectory,
    PositivityError,
    build_generator,
    evolve_open,
    in_pair_sector,
    lindblad_rhs,
    lindblad_rhs_unbalanced,
    steady_state,
)
from .series import TimeSeries, write_csv, write_sidecar
from .three_state import (
    BranchError,
    ThreeStateSolution,
    eval_three_state,
    eval_three_state_grid,
    solve_three_state,
)

__all__ = [
    "BoundaryCurves",
    "BranchError",
    "ClosedTrajectory",
    "EntanglementEvent",
    "IntegratorConfig",
    "LindbladGenerator",
    "OpenTrajectory",
    "PositivityError",
    "QubitPairReduced",
    "QubitPairSpec",
    "StepSizeError",
    "SystemParams",
    "ThreeStateSolution",
    "TimeSeries",
    "TwoModeAmplitudes",
    "TwoModeDensityMatrix",
    "XFormError",
    "amplitude_rhs",
    "amplitudes_to_density",
    "border_ratio",
    "build_generator",
    "csi_parameter",
    "detect_events",
    "eval_three_state",
    "eval_three_state_grid",
    "evolve_closed",
    "evolve_open",
    "fidelity",
    "gamma2",
    "in_pair_sector",
    "lindblad_rhs",
    "lindblad_rhs_unbalanced",
    "make_negativity_evaluator",
    "make_vacuum_state",
    "negativity",
    "negativity_signed",
    "partial_transpose",
    "project_qubit_pair",
    "solve_three_state",
    "steady_state",
    "sweep_gamma_boundaries",
    "vacuum_density",
    "write_csv",
    "write_sidecar",
    "xstate_eigenvalues",
    "xstate_negativity",
]

__version__ = "0.1.0"
