"""A posteriori energy corrections built from DIS quantities.

EN2 and DUC are closed-form sums over groups. BW and the m-block effective
Hamiltonian solve ``E = lowest eig of h - b^dagger (C - E)^-1 b`` with a
diagonal external block ``C``; the function ``E -> lowest eig - E`` is
concave and strictly decreasing below the lowest coupled external level, so
a bracketed Newton iteration finds its unique root there.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .dis import DISGroup
from .pauli import QubitOperator
from .reference import MeanFieldState, expectation, pair_coupling

log = logging.getLogger(__name__)

EN2_FLOOR = 1e-10
CI_CAP = 4000
SINGULAR_GAP = 1e-12


class ConvergenceError(RuntimeError):
    """Self-consistent iteration failed; ``last`` holds the final iterate."""

    def __init__(self, message: str, last: float):
        super().__init__(message)
        self.last = last


class DivergentDenominatorWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class CorrectionInput:
    e0: float
    groups: tuple[DISGroup, ...]

    def __init__(self, e0: float, groups: Sequence[DISGroup]):
        object.__setattr__(self, "e0", float(e0))
        object.__setattr__(self, "groups", tuple(groups))
        if any(not math.isfinite(g.denom) for g in self.groups):
            raise ValueError("denominators must be finite")

    @property
    def omegas(self) -> np.ndarray:
        return np.array([g.omega for g in self.groups], dtype=float)

    @property
    def denoms(self) -> np.ndarray:
        return np.array([g.denom for g in self.groups], dtype=float)


class BWResult(NamedTuple):
    delta: float
    converged: bool
    iterations: int


def _two_level(omega, denom):
    """``D/2 - sqrt((D/2)**2 + w**2)`` without cancellation for D > 0."""
    omega = np.asarray(omega, dtype=float)
    half = 0.5 * np.asarray(denom, dtype=float)
    root = np.hypot(half, omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = -omega ** 2 / (half + root)
    return np.where(half > 0, stable, half - root)


def en2(inp: CorrectionInput, floor: float = EN2_FLOOR) -> float:
    """``-sum w**2 / D`` over groups with ``|D| > floor``; skipped groups are warned about."""
    w, d = inp.omegas, inp.denoms
    bad = np.abs(d) <= floor
    if bad.any():
        flips = [g.flip for g, b in zip(inp.groups, bad) if b]
        warnings.warn(f"EN2 skipped {len(flips)} group(s) with |D| <= {floor:g}: flips {flips}",
                      DivergentDenominatorWarning, stacklevel=2)
    ok = ~bad
    return float(-np.sum(w[ok] ** 2 / d[ok]))


def duc(inp: CorrectionInput) -> float:
    """Sum of per-group two-level corrections ``D/2 - sqrt((D/2)**2 + w**2)``."""
    if not inp.groups:
        return 0.0
    return float(np.sum(_two_level(inp.omegas, inp.denoms)))


def _solve_lowest(h: np.ndarray, b: np.ndarray, c: np.ndarray, tol: float, max_iter: int):
    """Root of ``F(E) = lowest eig(h - b^H diag(1/(c - E)) b) - E``.

    ``h`` is m x m Hermitian, ``b`` is (n_ext, m), ``c`` the external diagonal.
    Returns ``(E, p, iterations)``.
    """
    h = np.asarray(h, dtype=complex)
    b = np.asarray(b, dtype=complex).reshape(-1, h.shape[0])
    c = np.asarray(c, dtype=float)
    coupled = np.linalg.norm(b, axis=1) > 0
    b, c = b[coupled], c[coupled]
    w, v = np.linalg.eigh(h)
    if len(c) == 0:
        return float(w[0]), v[:, 0], 0

    def evaluate(e):
        gap = c - e
        if np.any(np.abs(gap) < SINGULAR_GAP):
            return None
        sb = b / gap[:, None]
        heff = h - b.conj().T @ sb
        ww, vv = np.linalg.eigh(heff)
        p = vv[:, 0]
        bp = b @ p
        slope = -float(np.sum(np.abs(bp) ** 2 / gap ** 2)) - 1.0
        return float(ww[0]) - e, slope, p

    # full-matrix Gershgorin bound for the lower end of the bracket
    full_rows = np.abs(h).sum(axis=1) - np.abs(np.diag(h)) + np.abs(b).sum(axis=0)
    lo = min(float(np.min(np.diag(h).real - full_rows)), float(np.min(c - np.abs(b).sum(axis=1))))
    lo -= 1e-3 * max(1.0, abs(lo))
    hi = min(float(c.min()), float(w[0]))
    f_lo = evaluate(lo)
    if f_lo is None or f_lo[0] <= 0:
        raise ConvergenceError("could not bracket the self-consistent root", lo)

    e = hi
    res = evaluate(e)
    if res is not None and res[0] == 0.0:
        return e, res[2], 0
    if res is None or res[0] > 0:
        e = 0.5 * (lo + hi)
        res = evaluate(e)
    for it in range(1, max_iter + 1):
        if res is None:  # singular: shift back into the bracket
            hi = e
            e = 0.5 * (lo + hi)
            res = evaluate(e)
            continue
        f, slope, p = res
        if f == 0.0:
            return e, p, it
        if f > 0:
            lo = e
        else:
            hi = e
        step = -f / slope
        e_new = e + step
        if not (lo <= e_new <= hi):
            e_new = 0.5 * (lo + hi)
        if abs(e_new - e) < tol or hi - lo < tol:
            final = evaluate(e_new)
            if final is not None:
                return e_new, final[2], it
            return e, p, it
        e = e_new
        res = evaluate(e)
    raise ConvergenceError(f"no convergence after {max_iter} iterations", e)


def bw(inp: CorrectionInput, tol: float = 1e-10, max_iter: int = 200) -> BWResult:
    """Self-consistent ``dE = -sum w**2 / (D - dE)``, lowest root."""
    w, d = inp.omegas, inp.denoms
    keep = w > 0
    if not keep.any():
        return BWResult(0.0, True, 0)
    delta, _, its = _solve_lowest(np.zeros((1, 1)), w[keep].reshape(-1, 1), d[keep], tol, max_iter)
    return BWResult(float(delta), True, its)


def ci_matrix(op: QubitOperator, state: MeanFieldState, flips: Sequence[int]) -> np.ndarray:
    """``H_ij = <0|X_i H X_j|0>`` over the given flips (flip 0 is the reference)."""
    dim = len(flips)
    mat = np.zeros((dim, dim), dtype=complex)
    for a in range(dim):
        for b in range(a, dim):
            val = pair_coupling(op, state, flips[a], flips[b])
            mat[a, b] = val
            mat[b, a] = np.conj(val)
        mat[a, a] = mat[a, a].real
    return mat


def ci_in_dis(op: QubitOperator, state: MeanFieldState, groups: Sequence[DISGroup],
              cap: int = CI_CAP) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of the CI matrix over the reference and all DIS flips."""
    if len(groups) + 1 > cap:
        raise ValueError(f"CI dimension {len(groups) + 1} exceeds cap {cap}")
    flips = [0] + [g.flip for g in groups]
    w, v = np.linalg.eigh(ci_matrix(op, state, flips))
    return float(w[0]), v[:, 0]


def dynamic_block_size(groups: Sequence[DISGroup], threshold: float) -> int:
    """1 + number of groups whose ``w / |D|`` exceeds ``threshold`` (degenerate counts)."""
    n = 0
    for g in groups:
        if abs(g.denom) < 1e-8 or g.omega / abs(g.denom) > threshold:
            n += 1
    return 1 + n


def effective_hamiltonian(op: QubitOperator, state: MeanFieldState, groups: Sequence[DISGroup],
                          m: int, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Self-consistent lowest eigenvalue of the m-block effective Hamiltonian.

    The block is the reference plus the first ``m - 1`` of ``groups`` (pass
    them already ranked); all remaining groups are external with only their
    diagonal energies retained among themselves.
    """
    n = len(groups)
    if not 1 <= m <= n + 1:
        raise ValueError(f"block size m={m} outside [1, {n + 1}]")
    block = [0] + [g.flip for g in groups[:m - 1]]
    ext = [g.flip for g in groups[m - 1:]]
    h = ci_matrix(op, state, block)
    if not ext:
        return float(np.linalg.eigvalsh(h)[0])
    b = np.array([[pair_coupling(op, state, j, i) for i in block] for j in ext], dtype=complex)
    c = np.array([pair_coupling(op, state, j, j).real for j in ext])
    e, _, _ = _solve_lowest(h, b, c, tol, max_iter)
    return float(e)


def correction_input(op: QubitOperator, state: MeanFieldState, groups: Sequence[DISGroup]) -> CorrectionInput:
    return CorrectionInput(expectation(op, state), groups)
