"""ADAPT-VQE simulation of nuclear shell-model valence spaces."""

from .adapt import AdaptConfig, AdaptResult, AdaptState, LayerTrace, OperatorPool, build_pool, run_adapt
from .errors import (
    ConfigurationError,
    EstimatorError,
    InteractionParseError,
    InteractionValidationError,
    OptimizerError,
    ResourceError,
    ShellVQEError,
    SolverError,
)
from .hamiltonian import MSchemeHamiltonian, decouple_to_mscheme, load_hamiltonian, parse_interaction
from .measurement import count_measurement_circuits, measurement_plan
from .pauli import PauliSum, jw_hamiltonian, jw_pool_op
from .qsim import Circuit
from .valence import SlaterDet, ValenceSpace, build_valence_space, dim_mb, enumerate_m_basis

__version__ = "0.1.0"
