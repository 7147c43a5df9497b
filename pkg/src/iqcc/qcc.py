"""QCC ansatz energies, amplitude optimization, dressing and the iQCC loop."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from . import corrections as corr
from ._backend import kernels
from .dis import ActiveSpace, DISGroup, build_dis, filter_active, rank
from .pauli import PauliWord, QubitOperator, int_to_blocks
from .reference import MeanFieldState, expectation

log = logging.getLogger(__name__)

CORRECTIONS = ("en2", "duc", "bw", "effheff", "ci")


@dataclass(frozen=True)
class QCCAnsatz:
    """Ordered ``(generator, tau)`` pairs; ``U = prod_j exp(-i tau_j P_j / 2)``."""

    entanglers: tuple[tuple[PauliWord, float], ...] = ()

    @classmethod
    def from_lists(cls, generators: Sequence[PauliWord], taus: Sequence[float]) -> "QCCAnsatz":
        if len(generators) != len(taus):
            raise ValueError("generator and amplitude counts differ")
        return cls(tuple((g, float(t)) for g, t in zip(generators, taus)))

    @property
    def generators(self) -> list[PauliWord]:
        return [g for g, _ in self.entanglers]

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([t for _, t in self.entanglers], dtype=float)

    def __len__(self) -> int:
        return len(self.entanglers)


def _derivative_terms(op: QubitOperator, generator: PauliWord, tau: float) -> QubitOperator:
    """d/dtau of ``dress(op, generator, tau)``: only anticommuting terms survive."""
    nb = op.n_blocks
    pz, px = int_to_blocks(generator.z_mask, nb), int_to_blocks(generator.x_mask, nb)
    anti = kernels.anticommutes(op.z_blocks, op.x_blocks, pz, px)
    z = np.ascontiguousarray(op.z_blocks[anti])
    x = np.ascontiguousarray(op.x_blocks[anti])
    c = np.ascontiguousarray(op.coeffs[anti])
    z, x, c = kernels.dress_terms(z, x, c, pz, px, generator.hermitian_phase,
                                  -math.sin(tau), math.cos(tau))
    return QubitOperator(op.n_qubits, z, x, c).compact()


def dress(op: QubitOperator, generator: PauliWord, tau: float, drop_tol: float = 0.0) -> QubitOperator:
    """``U^dagger H U`` for ``U = exp(-i tau P / 2)``.

    Terms commuting with ``P`` are untouched; an anticommuting ``Q`` becomes
    ``cos(tau) Q - i sin(tau) Q P``.
    """
    if generator.n_qubits != op.n_qubits:
        raise ValueError("generator and operator act on different qubit counts")
    nb = op.n_blocks
    pz, px = int_to_blocks(generator.z_mask, nb), int_to_blocks(generator.x_mask, nb)
    z, x, c = kernels.dress_terms(op.z_blocks, op.x_blocks, op.coeffs, pz, px,
                                  generator.hermitian_phase, math.cos(tau), math.sin(tau))
    return QubitOperator(op.n_qubits, z, x, c).compact(drop_tol)


def dress_ansatz(op: QubitOperator, ansatz: QCCAnsatz, drop_tol: float = 0.0) -> QubitOperator:
    for gen, tau in ansatz.entanglers:
        op = dress(op, gen, tau, drop_tol)
    return op


def energy(op: QubitOperator, ansatz: QCCAnsatz, state: MeanFieldState) -> float:
    """``<0|U^dagger H U|0>`` by sequential dressing."""
    return expectation(dress_ansatz(op, ansatz), state)


def _xor_span(masks: Sequence[int]) -> set[int]:
    span = {0}
    for m in masks:
        span |= {s ^ m for s in span}
    return span


def _select_flips(op: QubitOperator, allowed: set[int]) -> QubitOperator:
    flips, starts = op.runs()
    pieces = [np.arange(starts[i], starts[i + 1]) for i, k in enumerate(flips) if k in allowed]
    if not pieces:
        return QubitOperator(op.n_qubits)
    rows = np.concatenate(pieces)
    return QubitOperator(op.n_qubits, op.z_blocks[rows], op.x_blocks[rows], op.coeffs[rows], canonical=True)


class AnsatzEnergy:
    """Energy and analytic gradient of a fixed generator list.

    Only terms whose x-mask can be cancelled by the remaining generators
    reach the reference expectation, so each stage keeps just those.
    """

    def __init__(self, op: QubitOperator, generators: Sequence[PauliWord], state: MeanFieldState):
        self.generators = list(generators)
        self.state = state
        masks = [g.x_mask for g in self.generators]
        self._tails = [_xor_span(masks[j:]) for j in range(len(masks) + 1)]
        self.op = _select_flips(op, self._tails[0])
        self.n_evals = 0

    def energy(self, taus) -> float:
        self.n_evals += 1
        h = self.op
        for j, (gen, tau) in enumerate(zip(self.generators, taus)):
            h = _select_flips(dress(h, gen, float(tau)), self._tails[j + 1])
        return expectation(h, self.state)

    def energy_and_gradient(self, taus) -> tuple[float, np.ndarray]:
        self.n_evals += 1
        g = len(self.generators)
        grad = np.zeros(g)
        h = self.op
        for j, (gen, tau) in enumerate(zip(self.generators, taus)):
            d = _select_flips(_derivative_terms(h, gen, float(tau)), self._tails[j + 1])
            for k in range(j + 1, g):
                d = _select_flips(dress(d, self.generators[k], float(taus[k])), self._tails[k + 1])
            grad[j] = expectation(d, self.state)
            h = _select_flips(dress(h, gen, float(tau)), self._tails[j + 1])
        return expectation(h, self.state), grad


def optimal_tau_single(e0: float, s: float, denom: float) -> tuple[float, float]:
    """Global minimum of ``E0 + s sin(tau) + (D/2)(1 - cos(tau))`` on [-pi, pi]."""
    half = 0.5 * denom
    tau = math.atan2(-s, half)
    r = math.hypot(half, s)
    if half > 0:
        e = e0 - s * s / (half + r)
    else:
        e = e0 + half - r
    return tau, e


@dataclass
class OptimizationResult:
    ansatz: QCCAnsatz
    energy: float
    gradient: np.ndarray
    n_evals: int
    converged: bool
    e_start: float

    @property
    def max_gradient(self) -> float:
        return float(np.max(np.abs(self.gradient))) if len(self.gradient) else 0.0


def _trig_fit(f: Callable[[np.ndarray], float], taus: np.ndarray, j: int, e_here: float):
    """Exact 1-D minimizer over ``taus[j]``: ``E = A + B sin t + C cos t``."""
    t0 = taus[j]
    shifted = taus.copy()
    shifted[j] = t0 + math.pi / 2
    e_plus = f(shifted)
    shifted[j] = t0 + math.pi
    e_pi = f(shifted)
    a = 0.5 * (e_here + e_pi)
    c = 0.5 * (e_here - e_pi)
    b = e_plus - a
    # E(t0 + u) = a + b sin u + c cos u
    u = math.atan2(-b, -c)
    t = math.remainder(t0 + u, 2 * math.pi)
    return t, a - math.hypot(b, c)


def _descend(fn: AnsatzEnergy, x: np.ndarray, tol_grad: float, max_evals: int):
    """BFGS with analytic gradients, then exact coordinate sweeps, until stationary."""
    x = x.copy()
    e, grad = fn.energy_and_gradient(x)
    best = (e, x.copy(), grad.copy())
    while np.max(np.abs(grad)) >= tol_grad and fn.n_evals < max_evals:
        res = minimize(fn.energy_and_gradient, x, jac=True, method="BFGS",
                       options={"gtol": tol_grad, "maxiter": max(1, (max_evals - fn.n_evals) // 2)})
        x = np.asarray(res.x, dtype=float)
        e, grad = fn.energy_and_gradient(x)
        if e < best[0]:
            best = (e, x.copy(), grad.copy())
        if np.max(np.abs(grad)) < tol_grad:
            break
        for j in range(len(x)):
            if fn.n_evals >= max_evals:
                break
            x[j], e = _trig_fit(fn.energy, x, j, e)
        e, grad = fn.energy_and_gradient(x)
        if e < best[0]:
            best = (e, x.copy(), grad.copy())
    # keep the final point unless an earlier one is lower beyond rounding
    if e > best[0] + 1e-12 * max(1.0, abs(best[0])):
        e, x, grad = best
    return float(e), x, grad


def optimize(op: QubitOperator, generators: Sequence[PauliWord], state: MeanFieldState,
             tol_grad: float = 1e-8, max_evals: int = 2000) -> OptimizationResult:
    """Minimize the QCC energy over amplitudes, starting from zeros.

    One generator uses the closed form. Several use BFGS with analytic
    gradients plus exact one-dimensional sweeps. If some generator's own
    closed-form optimum lies below the result, the descent is restarted
    from that point, so the answer never trails any single-generator optimum.
    """
    if not generators:
        raise ValueError("optimize needs at least one generator")
    fn = AnsatzEnergy(op, generators, state)
    g = len(generators)
    zero = np.zeros(g)
    e_start, grad0 = fn.energy_and_gradient(zero)

    singles = []
    for j in range(g):
        probe = zero.copy()
        probe[j] = math.pi
        tau, e_j = optimal_tau_single(e_start, grad0[j], fn.energy(probe) - e_start)
        singles.append((e_j, j, tau))
    if g == 1:
        x = np.array([singles[0][2]])
        e, grad = fn.energy_and_gradient(x)
        return OptimizationResult(QCCAnsatz.from_lists(generators, x), e, grad, fn.n_evals,
                                  bool(abs(grad[0]) < tol_grad), e_start)

    e, x, grad = _descend(fn, zero, tol_grad, max_evals)
    for e_j, j, tau in sorted(singles):
        if e_j >= e - 1e-10 * max(1.0, abs(e)) or fn.n_evals >= max_evals:
            continue
        start = zero.copy()
        start[j] = tau
        e2, x2, grad2 = _descend(fn, start, tol_grad, max_evals)
        if e2 < e:
            e, x, grad = e2, x2, grad2
    converged = bool(np.max(np.abs(grad)) < tol_grad)
    if not converged:
        log.warning("amplitude optimization stopped after %d evaluations with |grad| = %.2e",
                    fn.n_evals, np.max(np.abs(grad)))
    return OptimizationResult(QCCAnsatz.from_lists(generators, x), float(e), grad, fn.n_evals,
                              converged, e_start)


# --------------------------------------------------------------------------
# iQCC driver


@dataclass
class IQCCConfig:
    hamiltonian: QubitOperator
    reference: MeanFieldState
    generators_per_iter: int = 1
    ranking: str = "gradient"
    corrections: tuple[str, ...] = ()
    grad_threshold: float = 1e-3
    energy_threshold: Optional[float] = 1e-6
    max_iterations: int = 50
    active_space: Optional[ActiveSpace] = None
    effheff_m: int = 2
    effheff_threshold: Optional[float] = None
    tol_grad: float = 1e-8
    max_evals: int = 2000
    drop_tolerance: float = 0.0
    ci_cap: int = corr.CI_CAP

    def validate(self) -> None:
        if self.hamiltonian.n_qubits != self.reference.n_qubits:
            raise ValueError("reference and Hamiltonian qubit counts differ")
        if self.generators_per_iter < 1:
            raise ValueError("generators_per_iter must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        unknown = set(self.corrections) - set(CORRECTIONS)
        if unknown:
            raise ValueError(f"unknown corrections {sorted(unknown)}; expected {CORRECTIONS}")
        if self.effheff_m < 1:
            raise ValueError("effheff_m must be >= 1")
        if self.active_space is not None:
            self.active_space.validate(self.hamiltonian.n_qubits)
        rank([], self.ranking)


@dataclass
class IterationRecord:
    iteration: int
    e_iqcc: float
    corrected: dict[str, float]
    max_grad: float
    n_terms: int
    n_groups: int
    flips: list[int] = field(default_factory=list)
    amplitudes: list[float] = field(default_factory=list)
    e_optimized: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "e_iqcc": self.e_iqcc,
            "corrected": dict(self.corrected),
            "max_grad": self.max_grad,
            "n_terms": self.n_terms,
            "n_groups": self.n_groups,
            "flips": list(self.flips),
            "amplitudes": list(self.amplitudes),
            "e_optimized": self.e_optimized,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IterationRecord":
        return cls(d["iteration"], d["e_iqcc"], dict(d["corrected"]), d["max_grad"], d["n_terms"],
                   d["n_groups"], list(d["flips"]), list(d["amplitudes"]), d.get("e_optimized"))


@dataclass
class IQCCResult:
    records: list[IterationRecord]
    stop_reason: str
    hamiltonian: QubitOperator
    phase_times: dict[str, float]
    peak_terms: int

    @property
    def converged(self) -> bool:
        return self.stop_reason != "max_iterations"

    @property
    def energy(self) -> float:
        return self.records[-1].e_iqcc


def correction_label(name: str, m: int) -> str:
    return f"effheff_m{m}" if name == "effheff" else name


def compute_corrections(op: QubitOperator, state: MeanFieldState, groups: Sequence[DISGroup],
                        names: Sequence[str], ranking: str = "gradient", effheff_m: int = 2,
                        effheff_threshold: Optional[float] = None, ci_cap: int = corr.CI_CAP,
                        e0: Optional[float] = None) -> dict[str, float]:
    """Corrected total energies (not increments) for each requested scheme."""
    if e0 is None:
        e0 = expectation(op, state)
    inp = corr.CorrectionInput(e0, groups)
    out: dict[str, float] = {}
    for name in names:
        if name == "en2":
            out["en2"] = e0 + corr.en2(inp)
        elif name == "duc":
            out["duc"] = e0 + corr.duc(inp)
        elif name == "bw":
            out["bw"] = e0 + corr.bw(inp).delta
        elif name == "ci":
            out["ci"] = corr.ci_in_dis(op, state, groups, ci_cap)[0] if groups else e0
        elif name == "effheff":
            ranked = rank(groups, ranking)
            m = effheff_m
            if effheff_threshold is not None:
                m = corr.dynamic_block_size(ranked, effheff_threshold)
            m = min(m, len(ranked) + 1)
            out[correction_label(name, effheff_m)] = (
                corr.effective_hamiltonian(op, state, ranked, m) if ranked else e0)
        else:
            raise ValueError(f"unknown correction {name!r}")
    return out


def iterate(config: IQCCConfig, *, start_iteration: int = 1,
            previous: Optional[IterationRecord] = None,
            on_iteration: Optional[Callable[[IterationRecord, QubitOperator], None]] = None) -> IQCCResult:
    """Run iQCC until the gradient or corrected-energy criterion, or max iterations.

    Each iteration builds the DIS of the current Hamiltonian, records the
    reference energy and enabled corrections, stops if converged, otherwise
    optimizes the top-ranked generators and dresses the Hamiltonian with
    them. ``on_iteration`` receives each record with the dressed operator
    that the next iteration starts from. ``start_iteration``/``previous``
    resume from a checkpoint whose Hamiltonian is ``config.hamiltonian``.
    """
    config.validate()
    h = config.hamiltonian
    state = config.reference
    records: list[IterationRecord] = []
    times = {"dis": 0.0, "corrections": 0.0, "optimize": 0.0, "dress": 0.0}
    peak = len(h)
    stop = "max_iterations"
    it = start_iteration
    while it <= config.max_iterations:
        t0 = time.perf_counter()
        e0 = expectation(h, state)
        groups = build_dis(h, state)
        candidates = groups if config.active_space is None else filter_active(groups, config.active_space)
        ranked = rank(candidates, config.ranking)
        max_grad = max((g.omega for g in candidates), default=0.0)
        t1 = time.perf_counter()
        times["dis"] += t1 - t0
        corrected = compute_corrections(h, state, groups, config.corrections, config.ranking,
                                        config.effheff_m, config.effheff_threshold, config.ci_cap, e0)
        times["corrections"] += time.perf_counter() - t1
        rec = IterationRecord(it, e0, corrected, max_grad, len(h), len(groups))

        if not groups and it == 1:
            stop = "eigenstate"
            log.info("reference is an eigenstate: empty DIS")
        elif max_grad < config.grad_threshold:
            stop = "gradient"
        elif (config.energy_threshold and previous is not None and config.corrections
              and _corrected_change(previous, rec, config) < config.energy_threshold):
            stop = "energy"
        else:
            stop = None
        if stop is not None:
            records.append(rec)
            if on_iteration:
                on_iteration(rec, h)
            break

        chosen = ranked[:config.generators_per_iter]
        t2 = time.perf_counter()
        res = optimize(h, [g.generator for g in chosen], state, config.tol_grad, config.max_evals)
        t3 = time.perf_counter()
        times["optimize"] += t3 - t2
        h = dress_ansatz(h, res.ansatz, config.drop_tolerance)
        times["dress"] += time.perf_counter() - t3
        peak = max(peak, len(h))
        rec.flips = [g.flip for g in chosen]
        rec.amplitudes = [float(t) for t in res.ansatz.amplitudes]
        rec.e_optimized = res.energy
        records.append(rec)
        log.info("iter %d  E=%.12f  max|grad|=%.3e  terms=%d  groups=%d", it, e0, max_grad, rec.n_terms,
                 rec.n_groups)
        if on_iteration:
            on_iteration(rec, h)
        previous = rec
        it += 1
        stop = "max_iterations"
    return IQCCResult(records, stop, h, times, peak)


def _corrected_change(prev: IterationRecord, cur: IterationRecord, config: IQCCConfig) -> float:
    key = correction_label(config.corrections[0], config.effheff_m)
    if key not in prev.corrected or key not in cur.corrected:
        return math.inf
    return abs(cur.corrected[key] - prev.corrected[key])
