import numpy as np
import pytest

from helpers import random_hermitian, random_state
from iqcc.oracle import StateVector, to_dense
from iqcc.pauli import IsingComponent, PauliError, QubitOperator, ising_decompose
from iqcc.reference import (
    MeanFieldState,
    all_couplings,
    coupling,
    excited_energies,
    excited_energy,
    expectation,
    lowest_mean_field,
    pair_coupling,
    z_product,
)


def dense_element(op, state, i, j):
    """<0| X_i H X_j |0> from the dense matrix."""
    m = to_dense(op)
    return m[state.minus_mask ^ i, state.minus_mask ^ j]


class TestMeanFieldState:
    def test_string_round_trip(self):
        s = MeanFieldState.from_string("--++")
        assert s.eigenvalues == (-1, -1, 1, 1)
        assert s.minus_mask == 0b0011
        assert s.to_string() == "--++"
        assert s.flipped(0b1111).to_string() == "++--"

    @pytest.mark.parametrize("text", ["", "+0-", "ab"])
    def test_bad_strings(self, text):
        with pytest.raises(PauliError):
            MeanFieldState.from_string(text)

    def test_bad_eigenvalues(self):
        with pytest.raises(PauliError):
            MeanFieldState((1, 0))


class TestZProduct:
    state = MeanFieldState((-1, -1, 1))

    def test_pair(self):
        assert z_product(0b011, self.state) == 1

    def test_empty(self):
        assert z_product(0, self.state) == 1

    def test_plus_qubit(self):
        assert z_product(0b100, self.state) == 1

    def test_single_minus(self):
        assert z_product(0b001, self.state) == -1


class TestExpectation:
    def test_x_term_vanishes(self, rng):
        op = QubitOperator.from_pauli(3, [("X0", 1.0)])
        for _ in range(8):
            assert expectation(op, random_state(rng, 3)) == 0.0

    def test_zz(self):
        op = QubitOperator.from_pauli(2, [("Z0 Z1", 0.5)])
        assert expectation(op, MeanFieldState((-1, -1))) == 0.5

    def test_matches_statevector(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 7))
            op = random_hermitian(rng, n)
            s = random_state(rng, n)
            v = StateVector.basis(s)
            want = np.vdot(v.amplitudes, to_dense(op) @ v.amplitudes)
            assert expectation(op, s) == pytest.approx(want.real, abs=1e-10)

    def test_imaginary_residue_rejected(self):
        op = QubitOperator.from_pauli(1, [("Z0", 1j)])
        with pytest.raises(ValueError, match="imaginary"):
            expectation(op, MeanFieldState((1,)))

    def test_vanishing_rule_every_state(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 6))
            x = int(rng.integers(1, 1 << n))
            op = QubitOperator.from_terms(n, [((int(rng.integers(1 << n)), x), 1.0 + 0.5j)])
            for m in range(1 << n):
                assert expectation(op, MeanFieldState.from_mask(n, m)) == 0.0


class TestExcitedEnergy:
    def test_zero_flip_is_reference_energy(self, rng):
        op = random_hermitian(rng, 4)
        s = random_state(rng, 4)
        assert excited_energy(op, s, 0) == expectation(op, s)

    def test_single_flip_sign(self):
        a = 0.7
        comp = IsingComponent(1, 0, ((1, a),))
        s = MeanFieldState((-1,))
        assert excited_energy(comp, s, 0) == -a
        assert excited_energy(comp, s, 1) == a

    def test_needs_k0_component(self):
        with pytest.raises(PauliError):
            excited_energy(IsingComponent(1, 1, ((0, 1.0),)), MeanFieldState((1,)), 1)

    def test_matches_dense_diagonal(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 7))
            op = random_hermitian(rng, n)
            s = random_state(rng, n)
            ising0 = ising_decompose(op)[0]
            flips = [int(rng.integers(1 << n)) for _ in range(5)]
            vec = excited_energies(op, s, flips)
            for k, e in zip(flips, vec):
                want = dense_element(op, s, k, k).real
                ref = excited_energy(ising0, s, k) if ising0.flip == 0 else 0.0
                assert e == pytest.approx(want, abs=1e-10)
                assert ref == pytest.approx(want, abs=1e-10)


class TestCoupling:
    def test_absent_component(self):
        op = QubitOperator.from_pauli(2, [("Z0", 1.0), ("X0", 0.3)])
        assert coupling(op, MeanFieldState((1, 1)), 0b10) == 0

    def test_h2(self, h2_operator):
        from iqcc.dis import build_dis

        s = MeanFieldState.from_string("--++")
        (g,) = build_dis(h2_operator, s)
        assert abs(coupling(h2_operator, s, 0b1111)) == pytest.approx(g.omega, abs=1e-15)

    def test_matches_dense(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 7))
            op = random_hermitian(rng, n)
            s = random_state(rng, n)
            flips, vals = all_couplings(op, s)
            for k, v in zip(flips, vals):
                assert v == pytest.approx(dense_element(op, s, 0, k), abs=1e-10)
                assert coupling(op, s, k) == v


class TestPairCoupling:
    def test_reductions(self, rng):
        op = random_hermitian(rng, 5)
        s = random_state(rng, 5)
        for _ in range(10):
            i, j = (int(v) for v in rng.integers(0, 32, 2))
            assert pair_coupling(op, s, i, i).real == pytest.approx(excited_energy(op, s, i), abs=1e-12)
            assert pair_coupling(op, s, 0, j) == coupling(op, s, j)
            assert pair_coupling(op, s, i, j) == pytest.approx(np.conj(pair_coupling(op, s, j, i)), abs=1e-12)

    def test_matches_dense(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 6))
            op = random_hermitian(rng, n)
            s = random_state(rng, n)
            m = to_dense(op)
            for i in range(1 << n):
                for j in range(1 << n):
                    got = pair_coupling(op, s, i, j)
                    assert got == pytest.approx(m[s.minus_mask ^ i, s.minus_mask ^ j], abs=1e-10)


def test_lowest_mean_field(rng):
    for _ in range(10):
        op = random_hermitian(rng, 5)
        best = lowest_mean_field(op)
        diag = np.diag(to_dense(op)).real
        assert expectation(op, best) == pytest.approx(diag.min(), abs=1e-12)
