"""FCIDUMP integrals, frozen-core folding and the Jordan-Wigner qubit Hamiltonian."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .pauli import QubitOperator, n_blocks
from .reference import MeanFieldState

SYMMETRY_TOL = 1e-10


class FCIDumpError(ValueError):
    """Malformed FCIDUMP; the message starts with ``line N:`` when a line is at fault."""


class SpinOrbitalOrdering(str, enum.Enum):
    INTERLEAVED = "interleaved"  # 1a, 1b, 2a, 2b, ...
    BLOCKED = "blocked"  # all alpha, then all beta

    def qubit(self, orbital: int, spin: int, n_orbitals: int) -> int:
        if self is SpinOrbitalOrdering.INTERLEAVED:
            return 2 * orbital + spin
        return orbital + spin * n_orbitals


@dataclass
class IntegralSet:
    """Spatial-orbital integrals; ``two_body[p, q, r, s] = (pq|rs)`` in chemist notation."""

    n_orbitals: int
    n_electrons: int
    ms2: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray

    def __post_init__(self):
        n = self.n_orbitals
        self.one_body = np.asarray(self.one_body, dtype=float).reshape(n, n)
        self.two_body = np.asarray(self.two_body, dtype=float).reshape(n, n, n, n)

    def check_symmetry(self, tol: float = SYMMETRY_TOL) -> None:
        h, g = self.one_body, self.two_body
        if h.size and np.max(np.abs(h - h.T)) > tol:
            raise FCIDumpError("one-body integrals are not symmetric")
        for perm in _EIGHT_FOLD:
            if g.size and np.max(np.abs(g - g.transpose(perm))) > tol:
                raise FCIDumpError("two-body integrals break the 8-fold symmetry")

    def hf_energy(self, occupied: Optional[Iterable[int]] = None) -> float:
        """Energy of the closed-shell determinant doubly occupying ``occupied``."""
        occ = list(range(self.n_electrons // 2)) if occupied is None else list(occupied)
        h, g = self.one_body, self.two_body
        e = self.core_energy + 2.0 * sum(h[i, i] for i in occ)
        for i in occ:
            for j in occ:
                e += 2.0 * g[i, i, j, j] - g[i, j, j, i]
        return float(e)


# (pq|rs) = (qp|rs) = (pq|sr) = (qp|sr) = (rs|pq) = ...
_EIGHT_FOLD = [
    (0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
    (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0),
]

_HEADER_KEY = re.compile(r"([A-Za-z0-9_]+)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z0-9_]+\s*=|[,/\s]*$)", re.S)


def _parse_header(header: str) -> dict[str, str]:
    body = re.sub(r"^\s*&FCI", "", header, flags=re.I)
    body = re.sub(r"(&END|/)\s*$", "", body.strip(), flags=re.I)
    return {k.upper(): v.strip().rstrip(",") for k, v in _HEADER_KEY.findall(body)}


def parse_fcidump(text: str) -> IntegralSet:
    lines = text.splitlines()
    header_lines = []
    body_start = None
    for idx, line in enumerate(lines):
        header_lines.append(line)
        stripped = line.strip().upper()
        if stripped.endswith("&END") or stripped == "/" or stripped.endswith("/"):
            body_start = idx + 1
            break
    if body_start is None:
        raise FCIDumpError("line 1: missing namelist terminator (&END or /)")
    if not header_lines[0].strip().upper().startswith("&FCI"):
        raise FCIDumpError("line 1: FCIDUMP must start with &FCI")
    keys = _parse_header("\n".join(header_lines))
    try:
        norb = int(keys["NORB"])
        nelec = int(keys["NELEC"])
    except KeyError as exc:
        raise FCIDumpError(f"line 1: header lacks {exc.args[0]}") from None
    except ValueError:
        raise FCIDumpError("line 1: NORB/NELEC must be integers") from None
    ms2 = int(keys.get("MS2", "0") or 0)
    if norb < 0 or nelec < 0:
        raise FCIDumpError("line 1: NORB/NELEC must be non-negative")

    h = np.zeros((norb, norb))
    g = np.zeros((norb, norb, norb, norb))
    h_seen = np.zeros((norb, norb), dtype=bool)
    g_seen = np.zeros((norb,) * 4, dtype=bool)
    core = 0.0
    core_seen = False
    for lineno in range(body_start + 1, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise FCIDumpError(f"line {lineno}: expected 'value i j k l'")
        try:
            val = float(fields[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError:
            raise FCIDumpError(f"line {lineno}: cannot parse {line!r}") from None
        if any(t < 0 or t > norb for t in (i, j, k, l)):
            raise FCIDumpError(f"line {lineno}: orbital index out of range 0..{norb}")
        if i == j == k == l == 0:
            if core_seen and abs(core - val) > SYMMETRY_TOL:
                raise FCIDumpError(f"line {lineno}: inconsistent duplicate core energy")
            core, core_seen = val, True
        elif k == l == 0:
            if i == 0 or j == 0:
                raise FCIDumpError(f"line {lineno}: malformed one-body index")
            p, q = i - 1, j - 1
            for a, b in ((p, q), (q, p)):
                if h_seen[a, b] and abs(h[a, b] - val) > SYMMETRY_TOL:
                    raise FCIDumpError(f"line {lineno}: inconsistent duplicate one-body record")
                h[a, b], h_seen[a, b] = val, True
        elif 0 in (i, j, k, l):
            # orbital energies (i 0 0 0) are informational
            if j == k == l == 0:
                continue
            raise FCIDumpError(f"line {lineno}: malformed index pattern")
        else:
            idx = (i - 1, j - 1, k - 1, l - 1)
            for perm in _EIGHT_FOLD:
                t = tuple(idx[a] for a in perm)
                if g_seen[t] and abs(g[t] - val) > SYMMETRY_TOL:
                    raise FCIDumpError(f"line {lineno}: inconsistent duplicate two-body record")
                g[t], g_seen[t] = val, True
    ints = IntegralSet(norb, nelec, ms2, core, h, g)
    ints.check_symmetry()
    return ints


def read_fcidump(path) -> IntegralSet:
    with open(path, encoding="utf-8") as fh:
        return parse_fcidump(fh.read())


def write_fcidump(ints: IntegralSet, path, tol: float = 0.0) -> None:
    n = ints.n_orbitals
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f" &FCI NORB={n},NELEC={ints.n_electrons},MS2={ints.ms2},\n &END\n")
        for i in range(n):
            for j in range(i + 1):
                for k in range(n):
                    for l in range(k + 1):
                        if (i * (i + 1) // 2 + j) < (k * (k + 1) // 2 + l):
                            continue
                        v = ints.two_body[i, j, k, l]
                        if abs(v) > tol:
                            fh.write(f"{v:.17g} {i + 1} {j + 1} {k + 1} {l + 1}\n")
        for i in range(n):
            for j in range(i + 1):
                v = ints.one_body[i, j]
                if abs(v) > tol:
                    fh.write(f"{v:.17g} {i + 1} {j + 1} 0 0\n")
        fh.write(f"{ints.core_energy:.17g} 0 0 0 0\n")


def freeze_core(ints: IntegralSet, core: Iterable[int], active: Optional[Iterable[int]] = None) -> IntegralSet:
    """Fold doubly occupied ``core`` orbitals into the one-body part and core energy.

    ``active`` defaults to every non-core orbital and fixes the order of the
    retained orbitals.
    """
    core = sorted(set(int(c) for c in core))
    n = ints.n_orbitals
    if any(c < 0 or c >= n for c in core):
        raise ValueError(f"core orbital outside 0..{n - 1}")
    if active is None:
        keep = [p for p in range(n) if p not in core]
    else:
        keep = [int(p) for p in active]
        overlap = set(keep) & set(core)
        if overlap:
            raise ValueError(f"core orbitals {sorted(overlap)} overlap the active window")
    if 2 * len(core) > ints.n_electrons:
        raise ValueError("more core electrons than electrons")
    h, g = ints.one_body, ints.two_body
    e_core = ints.core_energy
    for c in core:
        e_core += 2.0 * h[c, c]
        for d in core:
            e_core += 2.0 * g[c, c, d, d] - g[c, d, d, c]
    h_eff = h.copy()
    for c in core:
        h_eff += 2.0 * g[:, :, c, c] - g[:, c, c, :]
    ix = np.array(keep, dtype=int)
    return IntegralSet(
        n_orbitals=len(keep),
        n_electrons=ints.n_electrons - 2 * len(core),
        ms2=ints.ms2,
        core_energy=float(e_core),
        one_body=h_eff[np.ix_(ix, ix)] if len(keep) else np.zeros((0, 0)),
        two_body=g[np.ix_(ix, ix, ix, ix)] if len(keep) else np.zeros((0, 0, 0, 0)),
    )


def _ladder(n_qubits: int, q: int, dagger: bool) -> QubitOperator:
    """JW image of a creation/annihilation operator on qubit ``q``.

    ``a^dagger_q = Z_{<q} (I - Z_q) X_q / 2`` and
    ``a_q = Z_{<q} (I + Z_q) X_q / 2``; in ZX form both are two terms.
    """
    string = (1 << q) - 1
    sign = -0.5 if dagger else 0.5
    return QubitOperator.from_terms(n_qubits, [((string, 1 << q), 0.5), ((string | 1 << q, 1 << q), sign)])


def jordan_wigner(ints: IntegralSet, ordering: SpinOrbitalOrdering = SpinOrbitalOrdering.INTERLEAVED,
                  drop_tol: float = 0.0) -> QubitOperator:
    """Qubit Hamiltonian on ``2 * n_orbitals`` qubits.

    ``H = sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q + E_core``
    with spin summed on every index pair.
    """
    ordering = SpinOrbitalOrdering(ordering)
    n = ints.n_orbitals
    nq = 2 * n
    if nq == 0:
        raise ValueError("no orbitals to map")
    up = [[_ladder(nq, ordering.qubit(p, s, n), True) for s in (0, 1)] for p in range(n)]
    dn = [[_ladder(nq, ordering.qubit(p, s, n), False) for s in (0, 1)] for p in range(n)]
    h, g = ints.one_body, ints.two_body

    pieces = [QubitOperator.identity(nq, ints.core_energy)]
    # products a+_p a_q are reused by the two-body part
    hop = {}
    for p in range(n):
        for q in range(n):
            for s in (0, 1):
                hop[p, q, s] = up[p][s] * dn[q][s]
    for (p, q, s), op in hop.items():
        if h[p, q] != 0.0:
            pieces.append(op.scaled(h[p, q]))
    # a+_p a+_r a_s a_q = a+_p a_q a+_r a_s - delta_qr a+_p a_s  (same spin)
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for s_ in range(n):
                    v = g[p, q, r, s_]
                    if v == 0.0:
                        continue
                    for sig in (0, 1):
                        for tau in (0, 1):
                            if sig == tau and (p == r or q == s_):
                                continue
                            term = hop[p, q, sig] * hop[r, s_, tau]
                            if sig == tau and q == r:
                                term = term - hop[p, s_, sig]
                            pieces.append(term.scaled(0.5 * v))
    nb = n_blocks(nq)
    z = np.concatenate([op.z_blocks for op in pieces]).reshape(-1, nb)
    x = np.concatenate([op.x_blocks for op in pieces]).reshape(-1, nb)
    c = np.concatenate([op.coeffs for op in pieces])
    out = QubitOperator(nq, z, x, c)
    # integral products are real; drop rounding residue in the imaginary parts
    return QubitOperator(nq, out.z_blocks, out.x_blocks, out.coeffs.real + 0j, canonical=True).compact(drop_tol)


def hf_reference(ints: IntegralSet, ordering: SpinOrbitalOrdering = SpinOrbitalOrdering.INTERLEAVED) -> MeanFieldState:
    """Occupy the lowest spin-orbitals, alpha before beta within an orbital."""
    ordering = SpinOrbitalOrdering(ordering)
    n = ints.n_orbitals
    ne = ints.n_electrons
    if ne > 2 * n:
        raise ValueError(f"{ne} electrons exceed {2 * n} spin-orbitals")
    n_alpha = (ne + ints.ms2) // 2 if (ne + ints.ms2) % 2 == 0 else (ne + 1) // 2
    n_beta = ne - n_alpha
    if n_alpha > n or n_beta < 0:
        raise ValueError("MS2 inconsistent with electron and orbital counts")
    minus = 0
    for p in range(n_alpha):
        minus |= 1 << ordering.qubit(p, 0, n)
    for p in range(n_beta):
        minus |= 1 << ordering.qubit(p, 1, n)
    return MeanFieldState.from_mask(2 * n, minus)
