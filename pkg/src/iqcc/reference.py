"""Expectation values of qubit operators on mean-field (product) states."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ._backend import kernels
from .pauli import IsingComponent, PauliError, QubitOperator, int_to_blocks, popcount

IMAG_TOL = 1e-12


@dataclass(frozen=True)
class MeanFieldState:
    """Joint eigenstate of all ``z_i``; ``eigenvalues[i]`` is +1 or -1."""

    eigenvalues: tuple[int, ...]

    def __post_init__(self):
        if not self.eigenvalues:
            raise PauliError("mean-field state needs at least one qubit")
        if any(v not in (1, -1) for v in self.eigenvalues):
            raise PauliError("mean-field eigenvalues must be +1 or -1")
        object.__setattr__(self, "eigenvalues", tuple(int(v) for v in self.eigenvalues))

    @classmethod
    def from_string(cls, text: str) -> "MeanFieldState":
        """``"--++"`` -> (-1, -1, +1, +1); leftmost character is qubit 0."""
        text = text.strip()
        if not text or set(text) - {"+", "-"}:
            raise PauliError(f"reference string must be over '+-', got {text!r}")
        return cls(tuple(-1 if ch == "-" else 1 for ch in text))

    @classmethod
    def from_mask(cls, n_qubits: int, minus_mask: int) -> "MeanFieldState":
        return cls(tuple(-1 if minus_mask >> i & 1 else 1 for i in range(n_qubits)))

    @property
    def n_qubits(self) -> int:
        return len(self.eigenvalues)

    @property
    def minus_mask(self) -> int:
        """Bit i set where qubit i has eigenvalue -1 (the computational index)."""
        m = 0
        for i, v in enumerate(self.eigenvalues):
            if v < 0:
                m |= 1 << i
        return m

    def flipped(self, k: int) -> "MeanFieldState":
        return MeanFieldState.from_mask(self.n_qubits, self.minus_mask ^ k)

    def to_string(self) -> str:
        return "".join("-" if v < 0 else "+" for v in self.eigenvalues)

    def __str__(self) -> str:
        return self.to_string()


def _minus_blocks(state: MeanFieldState, op: QubitOperator, flip: int = 0) -> np.ndarray:
    if state.n_qubits != op.n_qubits:
        raise PauliError(f"state has {state.n_qubits} qubits, operator has {op.n_qubits}")
    return int_to_blocks(state.minus_mask ^ flip, op.n_blocks)


def z_product(z_mask: int, state: MeanFieldState) -> int:
    """Product of the state's eigenvalues over the set bits of ``z_mask``."""
    if z_mask >> state.n_qubits:
        raise PauliError("mask wider than state")
    return -1 if popcount(z_mask & state.minus_mask) % 2 else 1


def _component_value(op: QubitOperator, flip: int, minus: np.ndarray) -> complex:
    rows = op.component_rows(flip)
    if rows.start == rows.stop:
        return 0j
    return kernels.signed_sum(op.z_blocks[rows], op.coeffs[rows], minus)


def expectation(op: QubitOperator, state: MeanFieldState) -> float:
    """<state|op|state>; only terms without x-factors contribute.

    Raises ``ValueError`` when the imaginary part exceeds 1e-12, which
    signals a non-Hermitian or phase-corrupted operator.
    """
    val = _component_value(op, 0, _minus_blocks(state, op))
    if abs(val.imag) > IMAG_TOL * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; operator not Hermitian?")
    return val.real


def excited_energy(ising0: Union[QubitOperator, IsingComponent], state: MeanFieldState, k: int) -> float:
    """Energy of the mean-field state obtained by flipping the qubits in ``k``."""
    if isinstance(ising0, IsingComponent):
        if ising0.flip != 0:
            raise PauliError("excited_energy needs the k = 0 Ising component")
        ising0 = ising0.to_operator()
    return expectation(ising0, state.flipped(k))


def excited_energies(op: QubitOperator, state: MeanFieldState, flips: Sequence[int]) -> np.ndarray:
    """Vectorized ``excited_energy`` for many flips (real parts)."""
    rows = op.component_rows(0)
    if not len(flips):
        return np.zeros(0)
    nb = op.n_blocks
    fl = np.array([int_to_blocks(k, nb) for k in flips], dtype=np.uint64).reshape(len(flips), nb)
    if rows.start == rows.stop:
        return np.zeros(len(flips))
    vals = kernels.diagonal_energies(op.z_blocks[rows], op.coeffs[rows], _minus_blocks(state, op), fl)
    return vals.real.copy()


def coupling(op: QubitOperator, state: MeanFieldState, k: int) -> complex:
    """``<0|H X_k|0>``, i.e. the flip-``k`` Ising component evaluated on the state."""
    return _component_value(op, k, _minus_blocks(state, op))


def pair_coupling(op: QubitOperator, state: MeanFieldState, i: int, j: int) -> complex:
    """``<0|X_i H X_j|0>``: component ``i ^ j`` evaluated on the state flipped by ``i``."""
    return _component_value(op, i ^ j, _minus_blocks(state, op, i))


def all_couplings(op: QubitOperator, state: MeanFieldState) -> tuple[list[int], np.ndarray]:
    """Couplings ``<0|H X_k|0>`` for every Ising component with ``k > 0``."""
    flips, starts = op.runs()
    vals = kernels.run_sums(op.z_blocks, op.coeffs, starts, _minus_blocks(state, op))
    if flips and flips[0] == 0:
        return flips[1:], vals[1:]
    return list(flips), vals


def lowest_mean_field(op: QubitOperator) -> MeanFieldState:
    """Mean-field state with the lowest energy, by enumeration (small n only)."""
    n = op.n_qubits
    if n > 24:
        raise ValueError("enumeration limited to 24 qubits")
    rows = op.component_rows(0)
    energies = np.zeros(1 << n)
    if rows.stop > rows.start:
        idx = np.arange(1 << n, dtype=np.uint64).reshape(-1, 1)
        for r in range(rows.start, rows.stop):
            energies += op.coeffs[r].real * kernels.signs(idx, op.z_blocks[r])
    return MeanFieldState.from_mask(n, int(np.argmin(energies)))
