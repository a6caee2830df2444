"""Truncated-Fock-space laboratory for eta-pseudo-PT symmetric su(1,1) Hamiltonians.

The model is ``H(t) = Omega(t) K0 + i G(t) (K+ + K-)`` with the metric
``eta = exp(i gamma (K+ - K-))``. Submodules:

``fock``      truncated Fock space, linear and antilinear operators, generators
``precise``   extended-precision conjugation of su(1,1) elements
``model``     time profiles, model parameters, metric, symmetry residuals
``dynamics``  integration, closed-form states, inner products, spectra
``config``    JSON run configuration
``verify``    verification suite, evolution runs, scans
``cli``       command-line front end
"""

from .dynamics import (
    DivergenceError,
    IntegratorConfig,
    StateVector,
    Trajectory,
    analytic_state,
    eta_inner,
    eta_norms,
    fidelity,
    initial_mode,
    integrate,
    pt_inner,
    spectrum,
)
from .fock import (
    AntilinearOperator,
    FockSpace,
    LinearOperator,
    ShapeError,
    commutator,
    discrete_symmetries,
    interior_distance,
    ladder_operators,
    matrix_exponential,
    su11_generators,
)
from .kernels import BACKEND
from .model import (
    ModelParams,
    ResidualReport,
    TimeProfile,
    adjoint_action_rhs,
    disentangled_metric,
    dyson_map,
    eta_tilde,
    gamma_from_coupling,
    hamiltonian_at,
    heisenberg_residual,
    metric,
    pseudo_hermiticity_residual,
    pseudo_pt_residual,
    transformed_hamiltonian,
)
from .precise import su11_conjugation

__version__ = "0.1.0"

__all__ = [
    "AntilinearOperator",
    "BACKEND",
    "DivergenceError",
    "FockSpace",
    "IntegratorConfig",
    "LinearOperator",
    "ModelParams",
    "ResidualReport",
    "ShapeError",
    "StateVector",
    "TimeProfile",
    "Trajectory",
    "adjoint_action_rhs",
    "analytic_state",
    "commutator",
    "discrete_symmetries",
    "disentangled_metric",
    "dyson_map",
    "eta_inner",
    "eta_norms",
    "eta_tilde",
    "fidelity",
    "gamma_from_coupling",
    "hamiltonian_at",
    "heisenberg_residual",
    "initial_mode",
    "integrate",
    "interior_distance",
    "ladder_operators",
    "matrix_exponential",
    "metric",
    "pseudo_hermiticity_residual",
    "pseudo_pt_residual",
    "pt_inner",
    "spectrum",
    "su11_conjugation",
    "su11_generators",
    "transformed_hamiltonian",
]
