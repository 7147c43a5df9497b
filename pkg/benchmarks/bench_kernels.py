"""Compare the compiled and numpy kernel backends.

Times the hot kernels on identical inputs, then an end-to-end iQCC run in a
subprocess per backend (selected with ``IQCC_BACKEND``).

Usage::

    python benchmarks/bench_kernels.py [--terms 20000] [--repeat 5]
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from iqcc import _kernels_py

try:
    from iqcc import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

END_TO_END = """
import time
import numpy as np
from iqcc._backend import BACKEND
from iqcc.pauli import QubitOperator, popcount
from iqcc.qcc import IQCCConfig, iterate
from iqcc.reference import lowest_mean_field

rng = np.random.default_rng(7)
n = {n}
terms = {{}}
for q in range(n):
    terms[(1 << q, 0)] = rng.uniform(0.5, 1.5) * rng.choice([-1, 1])
for _ in range(60):
    terms[(int(rng.integers(1, 1 << n)), 0)] = 0.2 * rng.normal()
while len(terms) < n + 160:
    z, x = int(rng.integers(0, 1 << n)), int(rng.integers(1, 1 << n))
    if popcount(z & x) % 2 == 0:
        terms[(z, x)] = 0.1 * rng.normal() * (-1) ** (popcount(z & x) // 2)
op = QubitOperator.from_terms(n, list(terms.items()))
t0 = time.perf_counter()
res = iterate(IQCCConfig(op, lowest_mean_field(op), generators_per_iter=4, corrections=("en2", "duc", "bw"),
                         grad_threshold=1e-6, energy_threshold=None, max_iterations={iters}))
print(BACKEND, time.perf_counter() - t0, len(res.records), res.peak_terms)
"""


def random_masks(rng, rows: int, blocks: int) -> np.ndarray:
    hi = rng.integers(0, 2 ** 32, size=(rows, blocks), dtype=np.uint64)
    lo = rng.integers(0, 2 ** 32, size=(rows, blocks), dtype=np.uint64)
    return (hi << np.uint64(32)) | lo


def kernel_cases(rng, n_terms: int):
    z, x = random_masks(rng, n_terms, 2), random_masks(rng, n_terms, 2)
    c = rng.normal(size=n_terms) + 1j * rng.normal(size=n_terms)
    pz, px, minus = random_masks(rng, 1, 2)[0], random_masks(rng, 1, 2)[0], random_masks(rng, 1, 2)[0]
    order = np.lexsort((z[:, 0], x[:, 0]))
    zs, xs = z[order], x[order]
    zs[1::2], xs[1::2] = zs[::2][: len(zs[1::2])], xs[::2][: len(xs[1::2])]
    starts = np.arange(0, n_terms + 1, 16, dtype=np.int64)
    if starts[-1] != n_terms:
        starts = np.append(starts, n_terms)
    flips = random_masks(rng, 64, 2)
    n_state = 14
    za = rng.integers(0, 1 << n_state, size=(200, 1), dtype=np.uint64)
    xa = rng.integers(0, 1 << n_state, size=(200, 1), dtype=np.uint64)
    ca = rng.normal(size=200) + 0j
    v = rng.normal(size=1 << n_state) + 0j
    return {
        "anticommutes": lambda k: k.anticommutes(z, x, pz, px),
        "dress_terms": lambda k: k.dress_terms(z, x, c, pz, px, -1j, 0.8, 0.6),
        "merge_sorted": lambda k: k.merge_sorted(zs, xs, c),
        "signed_sum": lambda k: k.signed_sum(z, c, minus),
        "run_sums": lambda k: k.run_sums(z, c, starts, minus),
        "diagonal_energies": lambda k: k.diagonal_energies(z, c, minus, flips),
        "apply_terms (14 qubits)": lambda k: k.apply_terms(za, xa, ca, v),
    }


def best_time(fn, repeat: int) -> float:
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 10_000:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--terms", type=int, default=20000)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--qubits", type=int, default=10, help="qubits in the end-to-end run")
    p.add_argument("--iterations", type=int, default=8, help="iterations in the end-to-end run")
    args = p.parse_args()

    rng = np.random.default_rng(2024)
    cases = kernel_cases(rng, args.terms)
    backends = [("python", _kernels_py)]
    if _compiled is not None:
        backends.insert(0, ("cython", _compiled))
    else:
        print("compiled kernels not built; timing the numpy fallback only")

    print(f"kernels on {args.terms} terms, 2 mask blocks (best of {args.repeat})")
    header = f"{'kernel':<26}" + "".join(f"{name:>14}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, fn in cases.items():
        times = [best_time(lambda k=k: fn(k), args.repeat) for _, k in backends]
        row = f"{label:<26}" + "".join(f"{t * 1e3:>12.3f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:>9.1f}x"
        print(row)

    print(f"\nend-to-end iQCC, {args.qubits} qubits, g=4, {args.iterations} iterations")
    code = END_TO_END.format(n=args.qubits, iters=args.iterations)
    for name, _ in backends:
        env = dict(os.environ, IQCC_BACKEND="python" if name == "python" else "")
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, secs, iters, peak = out.stdout.split()
        print(f"{backend:<10} {float(secs):8.2f} s  iterations {iters}  peak terms {peak}")


if __name__ == "__main__":
    main()
