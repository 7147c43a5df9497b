"""Pauli words and sparse qubit operators in ZX-canonical form.

A Pauli word is stored as the ordered product ``Z(z_mask) X(x_mask)``; a
``y`` on qubit ``i`` sets bit ``i`` in both masks and its phase
(``y = -i z x``) lives in the coefficient of the owning term. Operators keep
their terms as ``uint64`` bit-block arrays sorted by ``(x_mask, z_mask)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from ._backend import kernels

BLOCK = 64
_WORD_CHARS = "XYZ"


class PauliError(ValueError):
    """Raised for malformed Pauli words, operators or operator files."""


def n_blocks(n_qubits: int) -> int:
    return max(1, -(-n_qubits // BLOCK))


def int_to_blocks(value: int, nb: int) -> np.ndarray:
    out = np.zeros(nb, dtype=np.uint64)
    for b in range(nb):
        out[b] = (value >> (BLOCK * b)) & 0xFFFFFFFFFFFFFFFF
    return out


def blocks_to_int(blocks) -> int:
    value = 0
    for b, v in enumerate(blocks):
        value |= int(v) << (BLOCK * b)
    return value


def popcount(v: int) -> int:
    return bin(v).count("1")


def bits(mask: int) -> list[int]:
    """Indices of the set bits of ``mask``, ascending."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_from_indices(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << int(i)
    return m


@dataclass(frozen=True)
class PauliWord:
    """The operator product ``Z(z_mask) X(x_mask)`` on ``n_qubits`` qubits."""

    n_qubits: int
    z_mask: int = 0
    x_mask: int = 0

    def __post_init__(self):
        if self.n_qubits <= 0:
            raise PauliError("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if self.z_mask < 0 or self.x_mask < 0 or self.z_mask >= limit or self.x_mask >= limit:
            raise PauliError(f"mask does not fit in {self.n_qubits} qubits")

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliWord":
        return cls(n_qubits, 0, 0)

    @classmethod
    def from_label(cls, label: str, n_qubits: int) -> tuple["PauliWord", complex]:
        """Parse ``"X0 Y3 Z5"`` (or ``"I"``).

        Returns the word together with the phase that converts a coefficient
        written against the Hermitian Pauli string into ZX form.
        """
        z = x = 0
        tokens = label.split()
        if tokens == ["I"] or not tokens:
            return cls(n_qubits, 0, 0), 1.0 + 0j
        seen = 0
        for tok in tokens:
            kind = tok[:1].upper()
            if kind not in _WORD_CHARS or not tok[1:].isdigit():
                raise PauliError(f"bad Pauli factor {tok!r}")
            q = int(tok[1:])
            if q >= n_qubits:
                raise PauliError(f"qubit index {q} >= n_qubits {n_qubits}")
            if seen >> q & 1:
                raise PauliError(f"qubit {q} appears twice in {label!r}")
            seen |= 1 << q
            if kind in "XY":
                x |= 1 << q
            if kind in "ZY":
                z |= 1 << q
        word = cls(n_qubits, z, x)
        return word, word.hermitian_phase

    @property
    def n_y(self) -> int:
        return popcount(self.z_mask & self.x_mask)

    @property
    def hermitian_phase(self) -> complex:
        """Phase ``(-i)**n_y`` such that ``phase * Z X`` is the Hermitian Pauli string."""
        return (1, -1j, -1, 1j)[self.n_y % 4]

    @property
    def support(self) -> int:
        return self.z_mask | self.x_mask

    def label(self) -> str:
        """Label of the Hermitian Pauli string, qubits ascending; ``"I"`` for identity."""
        parts = []
        for q in bits(self.support):
            zb = self.z_mask >> q & 1
            xb = self.x_mask >> q & 1
            parts.append(("Y" if zb and xb else "X" if xb else "Z") + str(q))
        return " ".join(parts) if parts else "I"

    def commutes_with(self, other: "PauliWord") -> bool:
        return (popcount(self.z_mask & other.x_mask) + popcount(self.x_mask & other.z_mask)) % 2 == 0

    def __str__(self) -> str:
        return self.label()


@dataclass(frozen=True)
class PauliTerm:
    """A ZX-form coefficient attached to a word."""

    word: PauliWord
    coeff: complex

    @property
    def physical_coeff(self) -> complex:
        """Coefficient with respect to the Hermitian Pauli string of ``word``."""
        return rotate_phase(self.coeff, -self.word.n_y)


def multiply(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Exact product ``a * b`` in ZX form.

    ``Z(za) X(xa) Z(zb) X(xb) = (-1)**|xa & zb| Z(za^zb) X(xa^xb)``.
    """
    wa, wb = a.word, b.word
    if wa.n_qubits != wb.n_qubits:
        raise PauliError("qubit-count mismatch")
    sign = -1 if popcount(wa.x_mask & wb.z_mask) % 2 else 1
    word = PauliWord(wa.n_qubits, wa.z_mask ^ wb.z_mask, wa.x_mask ^ wb.x_mask)
    return PauliTerm(word, complex(a.coeff) * complex(b.coeff) * sign)


def _canonicalize(z: np.ndarray, x: np.ndarray, c: np.ndarray):
    if z.shape[0] == 0:
        return z, x, c
    nb = z.shape[1]
    keys = [z[:, b] for b in range(nb)] + [x[:, b] for b in range(nb)]
    order = np.lexsort(keys)
    z = np.ascontiguousarray(z[order])
    x = np.ascontiguousarray(x[order])
    c = np.ascontiguousarray(c[order])
    z, x, c = kernels.merge_sorted(z, x, c)
    return np.ascontiguousarray(z), np.ascontiguousarray(x), np.ascontiguousarray(c)


class QubitOperator:
    """Sparse sum of ZX-form Pauli words with complex coefficients.

    Terms are unique and sorted by ``(x_mask, z_mask)``. Exactly-zero
    coefficients may survive arithmetic until :meth:`compact` is called.
    Instances are treated as immutable.
    """

    __slots__ = ("n_qubits", "_z", "_x", "_c", "_runs")

    def __init__(self, n_qubits: int, z=None, x=None, coeffs=None, *, canonical: bool = False):
        if n_qubits <= 0:
            raise PauliError("n_qubits must be positive")
        nb = n_blocks(n_qubits)
        self.n_qubits = int(n_qubits)
        if z is None:
            z = np.zeros((0, nb), dtype=np.uint64)
            x = np.zeros((0, nb), dtype=np.uint64)
            coeffs = np.zeros(0, dtype=np.complex128)
        z = np.ascontiguousarray(z, dtype=np.uint64).reshape(-1, nb)
        x = np.ascontiguousarray(x, dtype=np.uint64).reshape(-1, nb)
        coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128).reshape(-1)
        if not (z.shape[0] == x.shape[0] == coeffs.shape[0]):
            raise PauliError("mask and coefficient arrays differ in length")
        if not canonical:
            z, x, coeffs = _canonicalize(z, x, coeffs)
        for a in (z, x, coeffs):
            a.flags.writeable = False
        self._z, self._x, self._c = z, x, coeffs
        self._runs = None

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, n_qubits: int) -> "QubitOperator":
        return cls(n_qubits)

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "QubitOperator":
        nb = n_blocks(n_qubits)
        return cls(n_qubits, np.zeros((1, nb)), np.zeros((1, nb)), [coeff], canonical=True)

    @classmethod
    def from_terms(cls, n_qubits: int, terms) -> "QubitOperator":
        """Build from ``(word, zx_coeff)`` pairs or a ``{word: zx_coeff}`` mapping.

        Words may be :class:`PauliWord` instances or ``(z_mask, x_mask)`` tuples.
        """
        if isinstance(terms, Mapping):
            terms = terms.items()
        nb = n_blocks(n_qubits)
        zs, xs, cs = [], [], []
        limit = 1 << n_qubits
        for word, coeff in terms:
            if isinstance(word, PauliWord):
                if word.n_qubits != n_qubits:
                    raise PauliError("qubit-count mismatch")
                zm, xm = word.z_mask, word.x_mask
            else:
                zm, xm = word
                if zm >= limit or xm >= limit:
                    raise PauliError(f"mask does not fit in {n_qubits} qubits")
            zs.append(int_to_blocks(zm, nb))
            xs.append(int_to_blocks(xm, nb))
            cs.append(coeff)
        if not cs:
            return cls(n_qubits)
        return cls(n_qubits, np.array(zs), np.array(xs), np.array(cs, dtype=np.complex128))

    @classmethod
    def from_pauli(cls, n_qubits: int, terms) -> "QubitOperator":
        """Build from ``(label, coeff)`` pairs with coefficients of Hermitian strings.

        >>> QubitOperator.from_pauli(2, [("Z0 X1", 0.5), ("Y0 Y1", 0.25)])
        """
        if isinstance(terms, Mapping):
            terms = terms.items()
        pairs = []
        for label, coeff in terms:
            word, phase = PauliWord.from_label(label, n_qubits)
            pairs.append((word, complex(coeff) * phase))
        return cls.from_terms(n_qubits, pairs)

    # access -------------------------------------------------------------
    @property
    def z_blocks(self) -> np.ndarray:
        return self._z

    @property
    def x_blocks(self) -> np.ndarray:
        return self._x

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def n_blocks(self) -> int:
        return self._z.shape[1]

    def __len__(self) -> int:
        return self._c.shape[0]

    @property
    def n_terms(self) -> int:
        return len(self)

    def word(self, r: int) -> PauliWord:
        return PauliWord(self.n_qubits, blocks_to_int(self._z[r]), blocks_to_int(self._x[r]))

    def __iter__(self) -> Iterator[PauliTerm]:
        for r in range(len(self)):
            yield PauliTerm(self.word(r), complex(self._c[r]))

    def terms(self) -> dict[PauliWord, complex]:
        return {t.word: t.coeff for t in self}

    def coefficient(self, word: PauliWord) -> complex:
        return self.terms().get(word, 0j)

    def runs(self) -> tuple[list[int], np.ndarray]:
        """X-masks of the Ising components and their row boundaries.

        Returns ``(flips, starts)`` where rows ``starts[i]:starts[i+1]`` all
        carry x-mask ``flips[i]``; flips are ascending.
        """
        if self._runs is None:
            m = len(self)
            if m == 0:
                self._runs = ([], np.zeros(1, dtype=np.int64))
            else:
                new = np.ones(m, dtype=bool)
                new[1:] = np.any(self._x[1:] != self._x[:-1], axis=1)
                starts = np.flatnonzero(new).astype(np.int64)
                flips = [blocks_to_int(self._x[s]) for s in starts]
                self._runs = (flips, np.append(starts, m).astype(np.int64))
        return self._runs

    def component_rows(self, flip: int) -> slice:
        flips, starts = self.runs()
        idx = _bisect(flips, flip)
        if idx is None:
            return slice(0, 0)
        return slice(int(starts[idx]), int(starts[idx + 1]))

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "QubitOperator"):
        if not isinstance(other, QubitOperator):
            raise TypeError(f"expected QubitOperator, got {type(other).__name__}")
        if other.n_qubits != self.n_qubits:
            raise PauliError("qubit-count mismatch")

    def __add__(self, other: "QubitOperator") -> "QubitOperator":
        return add_scaled(self, other, 1.0)

    def __sub__(self, other: "QubitOperator") -> "QubitOperator":
        return add_scaled(self, other, -1.0)

    def __neg__(self) -> "QubitOperator":
        return self.scaled(-1.0)

    def scaled(self, factor: complex) -> "QubitOperator":
        return QubitOperator(self.n_qubits, self._z, self._x, self._c * factor, canonical=True)

    def __mul__(self, other):
        if isinstance(other, QubitOperator):
            return self.product(other)
        return self.scaled(other)

    def __rmul__(self, other):
        return self.scaled(other)

    def product(self, other: "QubitOperator") -> "QubitOperator":
        """Operator product ``self @ other`` with all term pairs expanded."""
        self._check(other)
        m, k = len(self), len(other)
        if m == 0 or k == 0:
            return QubitOperator(self.n_qubits)
        za = np.repeat(self._z, k, axis=0)
        xa = np.repeat(self._x, k, axis=0)
        ca = np.repeat(self._c, k)
        zb = np.tile(other._z, (m, 1))
        xb = np.tile(other._x, (m, 1))
        cb = np.tile(other._c, m)
        par = kernels.pair_parity(np.ascontiguousarray(xa), np.ascontiguousarray(zb))
        coeff = ca * cb * (1.0 - 2.0 * par)
        return QubitOperator(self.n_qubits, za ^ zb, xa ^ xb, coeff)

    __matmul__ = product

    def adjoint(self) -> "QubitOperator":
        """``(c Z X)^dagger = conj(c) (-1)**|x & z| Z X``."""
        par = kernels.pair_parity(self._z, self._x)
        return QubitOperator(self.n_qubits, self._z, self._x,
                             np.conj(self._c) * (1.0 - 2.0 * par), canonical=True)

    def compact(self, tol: float = 0.0) -> "QubitOperator":
        """Drop terms with ``|coeff| <= tol`` (exact zeros only for ``tol == 0``)."""
        keep = np.abs(self._c) > tol
        if keep.all():
            return self
        return QubitOperator(self.n_qubits, self._z[keep], self._x[keep], self._c[keep], canonical=True)

    def diff_norm(self, other: "QubitOperator") -> float:
        """Largest coefficient difference, treating missing terms as zero."""
        d = add_scaled(self, other, -1.0)
        return float(np.max(np.abs(d._c))) if len(d) else 0.0

    def allclose(self, other: "QubitOperator", tol: float = 1e-12) -> bool:
        return self.diff_norm(other) <= tol

    def __eq__(self, other) -> bool:
        if not isinstance(other, QubitOperator):
            return NotImplemented
        return (self.n_qubits == other.n_qubits and np.array_equal(self._z, other._z)
                and np.array_equal(self._x, other._x) and np.array_equal(self._c, other._c))

    __hash__ = None

    def __repr__(self) -> str:
        return f"QubitOperator(n_qubits={self.n_qubits}, n_terms={len(self)})"


def _bisect(flips: list[int], flip: int):
    lo, hi = 0, len(flips)
    while lo < hi:
        mid = (lo + hi) // 2
        if flips[mid] < flip:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo < len(flips) and flips[lo] == flip else None


def add_scaled(target: QubitOperator, source: QubitOperator, factor: complex) -> QubitOperator:
    """``target + factor * source`` merged coefficient-wise, without pruning."""
    target._check(source)
    if len(source) == 0:
        return target
    return QubitOperator(
        target.n_qubits,
        np.concatenate([target._z, source._z]),
        np.concatenate([target._x, source._x]),
        np.concatenate([target._c, source._c * factor]),
    )


def is_hermitian(op: QubitOperator, tol: float = 1e-12) -> bool:
    return op.diff_norm(op.adjoint()) <= tol


@dataclass(frozen=True)
class IsingComponent:
    """The pure-Z operator multiplying ``X(flip)`` in the Ising decomposition."""

    n_qubits: int
    flip: int
    ising_terms: tuple[tuple[int, complex], ...]

    def to_operator(self) -> QubitOperator:
        return QubitOperator.from_terms(self.n_qubits, [((z, self.flip), c) for z, c in self.ising_terms])


def ising_decompose(op: QubitOperator) -> list[IsingComponent]:
    """Group terms by x-mask; component ``flip == 0`` is the pure Ising part."""
    flips, starts = op.runs()
    out = []
    for i, k in enumerate(flips):
        rows = range(int(starts[i]), int(starts[i + 1]))
        out.append(IsingComponent(op.n_qubits, k,
                                  tuple((blocks_to_int(op.z_blocks[r]), complex(op.coeffs[r])) for r in rows)))
    return out


def reassemble(components: Iterable[IsingComponent], n_qubits: int) -> QubitOperator:
    pairs = [((z, comp.flip), c) for comp in components for z, c in comp.ising_terms]
    return QubitOperator.from_terms(n_qubits, pairs)


# text format ------------------------------------------------------------

def _fmt(v: float) -> str:
    return "%.17g" % v


def serialize_operator(op: QubitOperator) -> str:
    """Render ``op`` in the operator file format, one term per line.

    Coefficients are written against the Hermitian Pauli strings, so a ``Y``
    factor appears literally; order follows the canonical ``(x, z)`` sort.
    """
    lines = [f"nqubits {op.n_qubits}"]
    for term in op:
        c = term.physical_coeff
        lines.append(f"{_fmt(c.real + 0.0)} {_fmt(c.imag + 0.0)} {term.word.label()}")
    return "\n".join(lines) + "\n"


def rotate_phase(c: complex, power: int) -> complex:
    """Exact ``c * (-i)**power``."""
    r = power % 4
    if r == 0:
        return c
    if r == 1:
        return complex(c.imag, -c.real)
    if r == 2:
        return complex(-c.real, -c.imag)
    return complex(-c.imag, c.real)


def parse_operator(text: str) -> QubitOperator:
    """Parse the operator file format; errors carry the 1-based line number."""
    n_qubits = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if n_qubits is None:
            if len(fields) != 2 or fields[0].lower() != "nqubits":
                raise PauliError(f"line {lineno}: expected header 'nqubits N'")
            try:
                n_qubits = int(fields[1])
            except ValueError:
                raise PauliError(f"line {lineno}: bad qubit count {fields[1]!r}") from None
            if n_qubits <= 0:
                raise PauliError(f"line {lineno}: qubit count must be positive")
            continue
        if len(fields) < 3:
            raise PauliError(f"line {lineno}: expected '<re> <im> <word>'")
        try:
            re_, im_ = float(fields[0]), float(fields[1])
        except ValueError:
            raise PauliError(f"line {lineno}: bad coefficient") from None
        try:
            word, _ = PauliWord.from_label(" ".join(fields[2:]), n_qubits)
        except PauliError as exc:
            raise PauliError(f"line {lineno}: {exc}") from None
        if fields[2:] != ["I"] and any(f == "I" for f in fields[2:]):
            raise PauliError(f"line {lineno}: 'I' must stand alone")
        pairs.append((word, rotate_phase(complex(re_, im_), word.n_y)))
    if n_qubits is None:
        raise PauliError("line 1: missing 'nqubits N' header")
    return QubitOperator.from_terms(n_qubits, pairs)


def read_operator(path) -> QubitOperator:
    with open(path, encoding="utf-8") as fh:
        return parse_operator(fh.read())


def write_operator(op: QubitOperator, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_operator(op))


__all__ = [
    "PauliError", "PauliWord", "PauliTerm", "QubitOperator", "IsingComponent",
    "multiply", "add_scaled", "is_hermitian", "ising_decompose", "reassemble",
    "parse_operator", "serialize_operator", "read_operator", "write_operator",
    "bits", "popcount", "mask_from_indices", "int_to_blocks", "blocks_to_int", "n_blocks",
]
