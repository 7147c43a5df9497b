"""Iterative qubit coupled cluster (iQCC) with a posteriori energy corrections."""
from ._backend import BACKEND
from .corrections import CorrectionInput, bw, ci_in_dis, duc, effective_hamiltonian, en2
from .dis import ActiveSpace, DISGroup, build_dis, filter_active, rank, select_generator
from .fermion import IntegralSet, freeze_core, hf_reference, jordan_wigner, parse_fcidump, read_fcidump
from .oracle import StateVector, ground_energy
from .pauli import (
    IsingComponent,
    PauliTerm,
    PauliWord,
    QubitOperator,
    add_scaled,
    is_hermitian,
    ising_decompose,
    multiply,
    parse_operator,
    read_operator,
    serialize_operator,
    write_operator,
)
from .qcc import IQCCConfig, IQCCResult, IterationRecord, QCCAnsatz, dress, energy, iterate, optimize
from .reference import MeanFieldState, coupling, excited_energy, expectation, pair_coupling, z_product

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ActiveSpace",
    "CorrectionInput",
    "DISGroup",
    "IQCCConfig",
    "IQCCResult",
    "IntegralSet",
    "IsingComponent",
    "IterationRecord",
    "MeanFieldState",
    "PauliTerm",
    "PauliWord",
    "QCCAnsatz",
    "QubitOperator",
    "StateVector",
    "add_scaled",
    "build_dis",
    "bw",
    "ci_in_dis",
    "coupling",
    "dress",
    "duc",
    "effective_hamiltonian",
    "en2",
    "energy",
    "excited_energy",
    "expectation",
    "filter_active",
    "freeze_core",
    "ground_energy",
    "hf_reference",
    "is_hermitian",
    "ising_decompose",
    "iterate",
    "jordan_wigner",
    "multiply",
    "optimize",
    "pair_coupling",
    "parse_fcidump",
    "parse_operator",
    "rank",
    "read_fcidump",
    "read_operator",
    "select_generator",
    "serialize_operator",
    "write_operator",
    "z_product",
]
