"""Brute-force reference: statevectors, exact unitaries, ground states.

Basis index bit ``i`` is qubit ``i``; a set bit means z-eigenvalue -1, so a
mean-field state maps to the basis vector at its ``minus_mask``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from ._backend import kernels
from .pauli import PauliWord, QubitOperator
from .reference import MeanFieldState

DENSE_CAP = 12
ITERATIVE_CAP = 14
DENSE_AUTO = 10
RESIDUAL_TOL = 1e-9


class OracleError(ValueError):
    pass


@dataclass
class StateVector:
    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise OracleError(f"expected {1 << self.n_qubits} amplitudes, got {self.amplitudes.shape}")

    @classmethod
    def basis(cls, state: MeanFieldState) -> "StateVector":
        v = np.zeros(1 << state.n_qubits, dtype=np.complex128)
        v[state.minus_mask] = 1.0
        return cls(v, state.n_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def vdot(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _check_small(op: QubitOperator, cap: int = ITERATIVE_CAP):
    if op.n_qubits > cap:
        raise OracleError(f"{op.n_qubits} qubits exceeds the oracle cap of {cap}")


def apply(op: QubitOperator, v: StateVector) -> StateVector:
    """Exact ``op |v>``."""
    if op.n_qubits != v.n_qubits:
        raise OracleError("dimension mismatch between operator and state")
    _check_small(op, 30)
    out = kernels.apply_terms(op.z_blocks, op.x_blocks, op.coeffs, np.ascontiguousarray(v.amplitudes))
    return StateVector(out, v.n_qubits)


def to_dense(op: QubitOperator) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of ``op``."""
    _check_small(op, DENSE_CAP)
    n = op.n_qubits
    dim = 1 << n
    mat = np.zeros((dim, dim), dtype=np.complex128)
    idx = np.arange(dim, dtype=np.uint64)
    cols = idx.reshape(-1, 1)
    for r in range(len(op)):
        zr = op.z_blocks[r]
        target = idx ^ op.x_blocks[r, 0]
        sgn = kernels.signs(np.ascontiguousarray(target.reshape(-1, 1)), zr)
        mat[target.astype(np.intp), cols[:, 0].astype(np.intp)] += op.coeffs[r] * sgn
    return mat


def expectation_value(op: QubitOperator, v: StateVector) -> complex:
    return v.vdot(apply(op, v))


def apply_exponential(generator: PauliWord, tau: float, v: StateVector) -> StateVector:
    """``exp(-i tau P / 2) |v>`` with ``P`` the Hermitian Pauli string of ``generator``."""
    if generator.n_qubits != v.n_qubits:
        raise OracleError("dimension mismatch between generator and state")
    p = QubitOperator.from_terms(v.n_qubits, [(generator, generator.hermitian_phase)])
    pv = apply(p, v).amplitudes
    return StateVector(np.cos(tau / 2) * v.amplitudes - 1j * np.sin(tau / 2) * pv, v.n_qubits)


def ansatz_state(generators, taus, state: MeanFieldState) -> StateVector:
    """``U(tau)|0>`` with ``U = prod_j exp(-i tau_j P_j / 2)``, first factor leftmost."""
    v = StateVector.basis(state)
    for gen, tau in reversed(list(zip(generators, taus))):
        v = apply_exponential(gen, tau, v)
    return v


def ground_energy(op: QubitOperator, method: str = "auto", seed: int = 0,
                  tol: float = RESIDUAL_TOL) -> tuple[float, StateVector]:
    """Lowest eigenpair of ``op``.

    ``method`` is ``"dense"`` (<= 12 qubits), ``"lanczos"`` (<= 14 qubits)
    or ``"auto"``, which goes dense up to 10 qubits.
    """
    n = op.n_qubits
    if method == "auto":
        method = "dense" if n <= DENSE_AUTO else "lanczos"
    if method == "dense":
        _check_small(op, DENSE_CAP)
        w, vecs = np.linalg.eigh(to_dense(op))
        e, vec = float(w[0]), vecs[:, 0]
    elif method == "lanczos":
        _check_small(op, ITERATIVE_CAP)
        dim = 1 << n
        if dim <= 2:
            return ground_energy(op, "dense")
        lin = spla.LinearOperator((dim, dim), dtype=np.complex128,
                                  matvec=lambda x: kernels.apply_terms(
                                      op.z_blocks, op.x_blocks, op.coeffs,
                                      np.ascontiguousarray(x.reshape(-1), dtype=np.complex128)))
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(dim) + 0j
        w, vecs = spla.eigsh(lin, k=1, which="SA", v0=v0, tol=0, ncv=min(dim - 1, 40))
        e, vec = float(w[0]), vecs[:, 0]
    else:
        raise OracleError(f"unknown method {method!r}")
    vec = vec / np.linalg.norm(vec)
    sv = StateVector(vec, n)
    resid = np.linalg.norm(apply(op, sv).amplitudes - e * vec)
    if resid > tol * max(1.0, abs(e)):
        raise OracleError(f"eigensolver residual {resid:.2e} above {tol:.1e}")
    return e, sv


def spectrum(op: QubitOperator) -> np.ndarray:
    return np.linalg.eigvalsh(to_dense(op))


def dominant_determinants(v: StateVector, threshold: float = 0.1) -> list[tuple[str, complex]]:
    """Basis states with ``|amplitude| >= threshold`` as ``(+/- string, amplitude)``."""
    idx = np.flatnonzero(np.abs(v.amplitudes) >= threshold)
    idx = idx[np.argsort(-np.abs(v.amplitudes[idx]), kind="stable")]
    return [(MeanFieldState.from_mask(v.n_qubits, int(i)).to_string(), complex(v.amplitudes[i])) for i in idx]
