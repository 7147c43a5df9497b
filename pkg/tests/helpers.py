"""Random operator ensembles shared by the test modules."""
from __future__ import annotations

import numpy as np

from iqcc.pauli import QubitOperator, popcount
from iqcc.reference import MeanFieldState, lowest_mean_field


def real_hermitian_term(z: int, x: int, value: float):
    """ZX-form entry for a real Hermitian Pauli string with an even y count."""
    ny = popcount(z & x)
    assert ny % 2 == 0
    return (z, x), value * (-1) ** (ny // 2)


def random_even_y(rng, n: int) -> tuple[int, int]:
    while True:
        z = int(rng.integers(0, 1 << n))
        x = int(rng.integers(1, 1 << n))
        if popcount(z & x) % 2 == 0:
            return z, x


def molecule_like(rng, n: int, n_diag: int = 30, n_off: int = 40, off_scale: float = 0.1) -> QubitOperator:
    """Real Hamiltonian with a dominant Ising part and weaker flip terms.

    Single-qubit z fields of order one make one mean-field state clearly
    lowest, mimicking a Hartree-Fock reference.
    """
    terms = {}
    for q in range(n):
        terms[(1 << q, 0)] = rng.uniform(0.5, 1.5) * rng.choice([-1, 1])
    for _ in range(n_diag):
        z = int(rng.integers(1, 1 << n))
        terms[(z, 0)] = terms.get((z, 0), 0.0) + 0.2 * rng.normal()
    for _ in range(n_off):
        key, val = real_hermitian_term(*random_even_y(rng, n), off_scale * rng.normal())
        terms[key] = terms.get(key, 0.0) + val
    return QubitOperator.from_terms(n, list(terms.items()))


def single_component(rng, n: int, n_diag: int = 12, n_off: int = 6) -> tuple[QubitOperator, int]:
    """Ising part plus one flip component ``k``; returns (operator, k)."""
    k = int(rng.integers(1, 1 << n))
    terms = {}
    for _ in range(n_diag):
        z = int(rng.integers(0, 1 << n))
        terms[(z, 0)] = terms.get((z, 0), 0.0) + rng.normal()
    for _ in range(n_off):
        z = int(rng.integers(0, 1 << n))
        if popcount(z & k) % 2:
            continue
        key, val = real_hermitian_term(z, k, rng.normal())
        terms[key] = terms.get(key, 0.0) + val
    return QubitOperator.from_terms(n, list(terms.items())), k


def direct_sum(a: QubitOperator, b: QubitOperator) -> QubitOperator:
    """``a (x) 1 + 1 (x) b`` on ``a.n + b.n`` qubits; ``b`` occupies the high qubits."""
    n = a.n_qubits + b.n_qubits
    terms = [((t.word.z_mask, t.word.x_mask), t.coeff) for t in a]
    shift = a.n_qubits
    terms += [((t.word.z_mask << shift, t.word.x_mask << shift), t.coeff) for t in b]
    return QubitOperator.from_terms(n, terms)


def ground_reference(op: QubitOperator) -> MeanFieldState:
    return lowest_mean_field(op)


def reference_dominated(rng, n: int, min_weight: float = 0.9, **kwargs):
    """Draw ``molecule_like`` operators until the lowest mean-field state
    carries at least ``min_weight`` of the exact ground state.

    Returns ``(operator, reference, exact_energy)``.
    """
    from iqcc.oracle import ground_energy

    while True:
        op = molecule_like(rng, n, **kwargs)
        ref = lowest_mean_field(op)
        e, vec = ground_energy(op)
        if abs(vec.amplitudes[ref.minus_mask]) ** 2 >= min_weight:
            return op, ref, e


def random_integrals(rng, n_orbitals: int = 4, n_electrons: int = 4, coupling: float = 0.05):
    """Random closed-shell integral set with a Hartree-Fock-like orbital ladder.

    Orbital energies rise with index; Coulomb integrals are of order one
    half and every other two-body element is ``coupling``-sized noise with
    the full 8-fold symmetry.
    """
    from iqcc.fermion import IntegralSet

    n = n_orbitals
    h = np.diag(np.sort(rng.uniform(-2.0, 0.5, n)))
    noise = coupling * rng.normal(size=(n, n))
    h = h + 0.5 * (noise + noise.T)
    g = coupling * rng.normal(size=(n, n, n, n))
    g = (g + g.transpose(1, 0, 2, 3)) / 2
    g = (g + g.transpose(0, 1, 3, 2)) / 2
    g = (g + g.transpose(2, 3, 0, 1)) / 2
    for p in range(n):
        for q in range(n):
            g[p, p, q, q] += rng.uniform(0.4, 0.7) if p != q else 0.0
        g[p, p, p, p] += rng.uniform(0.6, 0.9)
    g = (g + g.transpose(2, 3, 0, 1)) / 2
    return IntegralSet(n, n_electrons, 0, float(rng.uniform(0, 1)), h, g)



def random_hermitian(rng, n: int, n_terms: int = 30, complex_coeffs: bool = True) -> QubitOperator:
    """``A + A^dagger`` for random Pauli words with complex coefficients."""
    terms = []
    for _ in range(n_terms):
        z = int(rng.integers(0, 1 << n))
        x = int(rng.integers(0, 1 << n))
        c = rng.normal() + (1j * rng.normal() if complex_coeffs else 0.0)
        terms.append(((z, x), c))
    a = QubitOperator.from_terms(n, terms)
    return (a + a.adjoint()).compact()


def random_state(rng, n: int) -> MeanFieldState:
    return MeanFieldState.from_mask(n, int(rng.integers(0, 1 << n)))


def random_odd_y_word(rng, n: int):
    """Random Pauli word with an odd number of y factors."""
    from iqcc.pauli import PauliWord

    while True:
        z = int(rng.integers(0, 1 << n))
        x = int(rng.integers(1, 1 << n))
        if popcount(z & x) % 2 == 1:
            return PauliWord(n, z, x)


def fock_space_hamiltonian(ints, ordering: str = "interleaved") -> np.ndarray:
    """Dense second-quantized Hamiltonian built from explicit ladder matrices.

    Occupation-number basis with bit ``q`` of the index marking spin-orbital
    ``q`` occupied; signs come from counting occupied modes below ``q``.
    Independent of the Pauli-algebra code path.
    """
    n = ints.n_orbitals
    nq = 2 * n
    dim = 1 << nq

    def qubit(p, s):
        return 2 * p + s if ordering == "interleaved" else p + s * n

    ann = []
    for q in range(nq):
        a = np.zeros((dim, dim))
        for state in range(dim):
            if state >> q & 1:
                sign = -1.0 if bin(state & ((1 << q) - 1)).count("1") % 2 else 1.0
                a[state ^ (1 << q), state] = sign
        ann.append(a)
    cre = [a.T for a in ann]
    h = ints.core_energy * np.eye(dim)
    for p in range(n):
        for q in range(n):
            for s in (0, 1):
                h += ints.one_body[p, q] * cre[qubit(p, s)] @ ann[qubit(q, s)]
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for t in range(n):
                    v = ints.two_body[p, q, r, t]
                    if v == 0.0:
                        continue
                    for s1 in (0, 1):
                        for s2 in (0, 1):
                            h += 0.5 * v * (cre[qubit(p, s1)] @ cre[qubit(r, s2)]
                                            @ ann[qubit(t, s2)] @ ann[qubit(q, s1)])
    return h
