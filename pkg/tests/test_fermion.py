import numpy as np
import pytest

from helpers import fock_space_hamiltonian, random_integrals
from iqcc.fermion import (
    FCIDumpError,
    IntegralSet,
    SpinOrbitalOrdering,
    freeze_core,
    hf_reference,
    jordan_wigner,
    parse_fcidump,
    write_fcidump,
    read_fcidump,
)
from iqcc.oracle import ground_energy, spectrum, to_dense
from iqcc.pauli import QubitOperator, is_hermitian, ising_decompose
from iqcc.reference import expectation


def _number_and_sz(n_orbitals: int, ordering="interleaved"):
    nq = 2 * n_orbitals
    order = SpinOrbitalOrdering(ordering)
    n_terms, sz_terms = [("I", nq / 2)], [("I", 0.0)]
    for p in range(n_orbitals):
        for s in (0, 1):
            q = order.qubit(p, s, n_orbitals)
            n_terms.append((f"Z{q}", -0.5))
            sz_terms.append((f"Z{q}", -0.25 if s == 0 else 0.25))
    return QubitOperator.from_pauli(nq, n_terms), QubitOperator.from_pauli(nq, sz_terms)


class TestParseFcidump:
    def test_minimal_one_orbital(self):
        ints = parse_fcidump("&FCI NORB=1,NELEC=1,MS2=1,\n&END\n-1.0 1 1 0 0\n0.5 0 0 0 0\n")
        assert ints.n_orbitals == 1 and ints.n_electrons == 1 and ints.ms2 == 1
        assert ints.one_body[0, 0] == -1.0
        assert ints.core_energy == 0.5

    def test_core_record(self):
        ints = parse_fcidump("&FCI NORB=1,NELEC=2,\n/\n0.75 0 0 0 0\n")
        assert ints.core_energy == 0.75 and ints.ms2 == 0

    def test_symmetrized(self):
        ints = parse_fcidump(" &FCI NORB=2,NELEC=2,MS2=0,\n &END\n0.3 2 1 1 1\n0.1 2 1 0 0\n")
        g = ints.two_body
        for idx in [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]:
            assert g[idx] == 0.3
        assert ints.one_body[0, 1] == ints.one_body[1, 0] == 0.1

    def test_h2_fixture_matches_oracle(self, h2_integrals, h2_operator):
        fock = np.linalg.eigvalsh(fock_space_hamiltonian(h2_integrals))[0]
        e, _ = ground_energy(h2_operator)
        assert e == pytest.approx(fock, abs=1e-10)
        assert e == pytest.approx(-1.1457416726, abs=1e-9)

    @pytest.mark.parametrize(
        "text, match",
        [
            ("&FCI NORB=2,\n&END\n", "NELEC"),
            ("&FCI NELEC=2,\n&END\n", "NORB"),
            ("&FCI NORB=1,NELEC=2,\n&END\n1.0 2 1 0 0\n", "line 3"),
            ("&FCI NORB=1,NELEC=2,\n&END\n1.0 1 1 0 0\n1.5 1 1 0 0\n", "line 4.*inconsistent"),
            ("&FCI NORB=2,NELEC=2,\n&END\n0.2 1 2 1 1\n0.3 2 1 1 1\n", "line 4.*inconsistent"),
            ("&FCI NORB=1,NELEC=2,\n&END\n1.0 1 1 x 0\n", "line 3"),
            ("NORB=1\n", "line 1"),
        ],
    )
    def test_errors(self, text, match):
        with pytest.raises(FCIDumpError, match=match):
            parse_fcidump(text)

    def test_consistent_duplicates_accepted(self):
        ints = parse_fcidump("&FCI NORB=2,NELEC=2,\n&END\n0.2 1 2 1 1\n0.2 2 1 1 1\n")
        assert ints.two_body[0, 1, 0, 0] == 0.2

    def test_write_read_round_trip(self, h2_integrals, tmp_path):
        path = tmp_path / "FCIDUMP"
        write_fcidump(h2_integrals, path)
        back = read_fcidump(path)
        np.testing.assert_array_equal(back.one_body, h2_integrals.one_body)
        np.testing.assert_allclose(back.two_body, h2_integrals.two_body, atol=1e-15)
        assert back.core_energy == h2_integrals.core_energy


class TestJordanWigner:
    def test_single_mode(self):
        eps, core = -0.7, 0.2
        ints = IntegralSet(1, 1, 1, core, [[eps]], np.zeros((1, 1, 1, 1)))
        op = jordan_wigner(ints)
        expected = QubitOperator.from_pauli(2, [("I", eps + core), ("Z0", -eps / 2), ("Z1", -eps / 2)])
        assert op.allclose(expected, tol=1e-15)

    def test_h2_two_components(self, h2_operator):
        assert h2_operator.n_qubits == 4
        assert [c.flip for c in ising_decompose(h2_operator)] == [0, 0b1111]
        assert is_hermitian(h2_operator)

    @pytest.mark.parametrize("ordering", ["interleaved", "blocked"])
    def test_spectrum_matches_fock_space(self, rng, ordering):
        for n in (1, 2, 3):
            ints = random_integrals(rng, n, min(2, 2 * n), coupling=0.2)
            op = jordan_wigner(ints, ordering)
            want = np.linalg.eigvalsh(fock_space_hamiltonian(ints, ordering))
            np.testing.assert_allclose(spectrum(op), want, atol=1e-10)

    def test_matrix_matches_fock_space(self, rng):
        # basis index bit q set <=> spin-orbital q occupied <=> z eigenvalue -1
        ints = random_integrals(rng, 2, 2, coupling=0.3)
        np.testing.assert_allclose(to_dense(jordan_wigner(ints)), fock_space_hamiltonian(ints), atol=1e-12)

    @pytest.mark.parametrize("ordering", ["interleaved", "blocked"])
    def test_number_and_sz_conserved(self, rng, ordering):
        ints = random_integrals(rng, 3, 4, coupling=0.2)
        h = to_dense(jordan_wigner(ints, ordering))
        for sym in _number_and_sz(3, ordering):
            s = to_dense(sym)
            assert np.linalg.norm(h @ s - s @ h) < 1e-10

    def test_hf_expectation_matches_integrals(self, rng):
        for n, ne in [(2, 2), (3, 4), (4, 4)]:
            ints = random_integrals(rng, n, ne, coupling=0.1)
            op = jordan_wigner(ints)
            assert expectation(op, hf_reference(ints)) == pytest.approx(ints.hf_energy(), abs=1e-10)

    def test_h2_hf_energy(self, h2_integrals, h2_operator):
        e = expectation(h2_operator, hf_reference(h2_integrals))
        assert e == pytest.approx(-1.1247307495, abs=1e-9)


class TestHFReference:
    def test_h2_interleaved(self, h2_integrals):
        assert hf_reference(h2_integrals).eigenvalues == (-1, -1, 1, 1)

    def test_blocked(self, h2_integrals):
        assert hf_reference(h2_integrals, "blocked").eigenvalues == (-1, 1, -1, 1)

    def test_empty_and_full(self):
        zero = IntegralSet(3, 0, 0, 0.0, np.zeros((3, 3)), np.zeros((3,) * 4))
        full = IntegralSet(3, 6, 0, 0.0, np.zeros((3, 3)), np.zeros((3,) * 4))
        assert hf_reference(zero).eigenvalues == (1,) * 6
        assert hf_reference(full).eigenvalues == (-1,) * 6

    def test_open_shell_alpha_first(self):
        ints = IntegralSet(2, 3, 1, 0.0, np.zeros((2, 2)), np.zeros((2,) * 4))
        assert hf_reference(ints).to_string() == "---+"

    def test_too_many_electrons(self):
        ints = IntegralSet(1, 3, 1, 0.0, np.zeros((1, 1)), np.zeros((1,) * 4))
        with pytest.raises(ValueError):
            hf_reference(ints)


class TestFreezeCore:
    def test_empty_core_is_identity(self, h2_integrals):
        out = freeze_core(h2_integrals, [])
        np.testing.assert_array_equal(out.one_body, h2_integrals.one_body)
        np.testing.assert_array_equal(out.two_body, h2_integrals.two_body)
        assert out.core_energy == h2_integrals.core_energy

    def test_freeze_everything_gives_determinant_energy(self, rng):
        ints = random_integrals(rng, 3, 6, coupling=0.1)
        out = freeze_core(ints, [0, 1, 2])
        assert out.n_orbitals == 0 and out.n_electrons == 0
        full = jordan_wigner(ints)
        assert out.core_energy == pytest.approx(expectation(full, hf_reference(ints)), abs=1e-10)

    def test_two_orbital_restriction(self, rng):
        ints = random_integrals(rng, 2, 4, coupling=0.2)
        frozen = freeze_core(ints, [0])
        assert frozen.n_orbitals == 1 and frozen.n_electrons == 2
        # full Fock space restricted to states with spin-orbitals 0a, 0b occupied
        h = fock_space_hamiltonian(ints)
        keep = [s for s in range(16) if s & 0b11 == 0b11]
        restricted = np.linalg.eigvalsh(h[np.ix_(keep, keep)])
        np.testing.assert_allclose(spectrum(jordan_wigner(frozen)), restricted, atol=1e-10)

    def test_overlap_with_active_window(self, h2_integrals):
        with pytest.raises(ValueError, match="overlap"):
            freeze_core(h2_integrals, [0], active=[0, 1])

    def test_active_window_subset(self, rng):
        ints = random_integrals(rng, 3, 4, coupling=0.1)
        out = freeze_core(ints, [0], active=[2])
        assert out.n_orbitals == 1
        assert out.two_body[0, 0, 0, 0] == ints.two_body[2, 2, 2, 2]
