"""qscramble: a numerical laboratory for quantum information scrambling.

Out-of-time-ordered correlators, squared commutators, Renyi mutual
information and Hayden-Preskill recovery fidelities, computed by several
independent methods (exact diagonalization, Krylov typicality, stochastic
random-circuit master equations, free-fermion closed forms, and TEBD on
matrix product operators) that cross-validate each other.
"""

__version__ = "0.1.0"

from .core import (
    DenseOperator,
    DenseState,
    NumericalError,
    ResourceLimitError,
    Subsystem,
    apply_to_sites,
    apply_unitary,
    basis_state,
    entropy,
    haar_unitary,
    matrix_norms,
    mutual_information,
    partial_trace,
    random_state,
    tensor_embed,
)
from .fields import SpaceTimeField
from .hamiltonian import SpinChainHamiltonian, mixed_field_ising
from .paulis import PauliString
