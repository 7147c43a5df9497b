"""Direct Interaction Set: grouping, gradients, denominators, ranking, filters."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .pauli import PauliWord, QubitOperator, mask_from_indices, popcount
from .reference import MeanFieldState, all_couplings, excited_energies, expectation

GRADIENT_FLOOR = 1e-12
DEGENERACY_FLOOR = 1e-8
RANKINGS = ("gradient", "en1", "en2")


@dataclass(frozen=True)
class DISGroup:
    """One flip-index group of the DIS.

    ``coupling`` is ``<0|H X_k|0>`` and ``omega`` its modulus. ``gradient`` is
    the signed derivative ``dE/dtau`` at zero of the stored representative
    ``generator``; ``denom`` is ``E_k - E_0``.
    """

    flip: int
    omega: float
    coupling: complex
    denom: float
    generator: PauliWord
    gradient: float

    @property
    def en1_weight(self) -> float:
        return _weight(self, "en1")

    @property
    def en2_weight(self) -> float:
        return _weight(self, "en2")


@dataclass(frozen=True)
class ActiveSpace:
    """Active qubits plus the number of inactive indices a flip may touch."""

    active_qubits: frozenset
    max_inactive: int = 0

    def __init__(self, active_qubits: Iterable[int], max_inactive: int = 0):
        active = frozenset(int(q) for q in active_qubits)
        if any(q < 0 for q in active):
            raise ValueError("active qubit indices must be non-negative")
        if max_inactive < 0:
            raise ValueError("max_inactive must be >= 0")
        object.__setattr__(self, "active_qubits", active)
        object.__setattr__(self, "max_inactive", int(max_inactive))

    @property
    def mask(self) -> int:
        return mask_from_indices(self.active_qubits)

    def admits(self, flip: int) -> bool:
        return popcount(flip & ~self.mask) <= self.max_inactive

    def validate(self, n_qubits: int) -> None:
        bad = [q for q in self.active_qubits if q >= n_qubits]
        if bad:
            raise ValueError(f"active qubits {sorted(bad)} outside [0, {n_qubits})")


def select_generator(k: int, state: MeanFieldState, policy: str = "lowest") -> PauliWord:
    """``X_k`` with a ``y`` on the lowest set bit of ``k``.

    The z-part is a single bit inside ``k``, so it overlaps ``k`` in an odd
    number of bits and ``X_k * P`` is a pure-Z word.
    """
    if k == 0:
        raise ValueError("flip index must be non-zero")
    if policy != "lowest":
        raise ValueError(f"unknown generator policy {policy!r}")
    low = k & -k
    return PauliWord(state.n_qubits, low, k)


def generator_gradient(coupling: complex, generator: PauliWord, state: MeanFieldState) -> float:
    """dE/dtau at zero for a single-``y`` generator of the coupling's group.

    With ``P = -i Z(c) X(k)``, ``<0|[H, P]|0>`` reduces to the real part of
    the coupling times the reference eigenvalue on qubit ``c``.
    """
    c = generator.z_mask
    if popcount(c) != 1 or not (c & generator.x_mask):
        raise ValueError("gradient shortcut needs a single-y generator")
    s = -1 if state.minus_mask & c else 1
    return s * coupling.real


def build_dis(
    op: QubitOperator,
    state: MeanFieldState,
    space: Optional[ActiveSpace] = None,
    gradient_floor: float = GRADIENT_FLOOR,
) -> list[DISGroup]:
    """All groups with ``omega > gradient_floor``, ascending by flip index."""
    flips, vals = all_couplings(op, state)
    keep = [i for i, v in enumerate(vals) if abs(v) > gradient_floor
            and (space is None or space.admits(flips[i]))]
    if not keep:
        return []
    e0 = expectation(op, state)
    kept_flips = [flips[i] for i in keep]
    ek = excited_energies(op, state, kept_flips)
    groups = []
    for idx, i in enumerate(keep):
        k = flips[i]
        cpl = complex(vals[i])
        gen = select_generator(k, state)
        groups.append(DISGroup(
            flip=k,
            omega=abs(cpl),
            coupling=cpl,
            denom=float(ek[idx] - e0),
            generator=gen,
            gradient=generator_gradient(cpl, gen, state),
        ))
    return groups


def _weight(g: DISGroup, scheme: str, degeneracy_floor: float = DEGENERACY_FLOOR) -> float:
    if scheme == "gradient":
        return g.omega
    if abs(g.denom) < degeneracy_floor:
        return math.inf
    if scheme == "en1":
        return 2.0 * g.omega / abs(g.denom)
    if scheme == "en2":
        return g.omega ** 2 / abs(g.denom)
    raise ValueError(f"unknown ranking scheme {scheme!r}; expected one of {RANKINGS}")


def rank(groups: Sequence[DISGroup], scheme: str = "gradient",
         degeneracy_floor: float = DEGENERACY_FLOOR) -> list[DISGroup]:
    """Sort by descending weight, ties by ascending flip index."""
    if scheme not in RANKINGS:
        raise ValueError(f"unknown ranking scheme {scheme!r}; expected one of {RANKINGS}")
    return sorted(groups, key=lambda g: (-_weight(g, scheme, degeneracy_floor), g.flip))


def filter_active(groups: Iterable[DISGroup], space: ActiveSpace) -> list[DISGroup]:
    return [g for g in groups if space.admits(g.flip)]
