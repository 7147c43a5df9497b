"""Command-line driver: ``iqcc map | run | exact | correct``.

Exit codes: 0 success or convergence, 2 bad input or configuration,
3 stopped at ``max_iterations``, 4 paused by ``--stop-after`` with a
checkpoint written, 1 any other failure. Every failure prints one line
on stderr starting with ``iqcc-error <kind>:``.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import corrections as corr
from ._backend import BACKEND
from .dis import RANKINGS, ActiveSpace, build_dis, rank
from .fermion import (FCIDumpError, SpinOrbitalOrdering, freeze_core, hf_reference, jordan_wigner,
                      parse_fcidump)
from .oracle import OracleError, dominant_determinants, ground_energy
from .pauli import PauliError, QubitOperator, ising_decompose, parse_operator, read_operator, write_operator
from .qcc import CORRECTIONS, IQCCConfig, IQCCResult, IterationRecord, compute_corrections, correction_label, iterate
from .reference import MeanFieldState, expectation, lowest_mean_field

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_MAX_ITER = 3
EXIT_PAUSED = 4

THREADS_ENV = "IQCC_THREADS"
LOG_COLUMNS = ("iter", "e_iqcc", "e_en2", "e_duc", "e_bw", "max_grad", "n_terms", "n_groups")

log = logging.getLogger("iqcc")


class InputError(Exception):
    """Invalid user input; reported with exit code 2."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def _diagnostic(kind: str, message: str) -> None:
    text = " ".join(str(message).split())
    print(f"iqcc-error {kind}: {text}", file=sys.stderr)


# --------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    hamiltonian: Path
    reference: str = "hf"
    generators_per_iter: int = 1
    ranking: str = "gradient"
    corrections: tuple[str, ...] = ()
    grad_threshold: float = 1e-3
    energy_threshold: float = 1e-6
    max_iterations: int = 50
    active_qubits: Optional[tuple[int, ...]] = None
    max_inactive: int = 0
    checkpoint_dir: Optional[Path] = None
    output_dir: Path = Path("iqcc_out")
    log_format: str = "csv"
    seed: int = 0
    threads: int = 1
    effheff_m: int = 2
    effheff_threshold: Optional[float] = None
    drop_tolerance: float = 0.0
    ordering: str = "interleaved"
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def checkpoint_path(self) -> Path:
        return self.checkpoint_dir if self.checkpoint_dir is not None else self.output_dir / "checkpoint"

    def fingerprint(self) -> str:
        """Hash of every setting that changes the computed records."""
        keep = {k: v for k, v in sorted(self.raw.items())
                if k not in ("output_dir", "checkpoint_dir", "threads", "log_format", "max_iterations")}
        keep["hamiltonian_sha"] = hashlib.sha256(self.hamiltonian.read_bytes()).hexdigest()
        return hashlib.sha256(json.dumps(keep, sort_keys=True, default=str).encode()).hexdigest()


_TYPES = {
    "hamiltonian": str, "reference": str, "generators_per_iter": int, "ranking": str,
    "corrections": list, "grad_threshold": float, "energy_threshold": float,
    "max_iterations": int, "active_qubits": list, "max_inactive": int,
    "checkpoint_dir": str, "output_dir": str, "log_format": str, "seed": int,
    "threads": int, "effheff_m": int, "effheff_threshold": float, "drop_tolerance": float,
    "ordering": str,
}


def load_config(path: Path) -> RunConfig:
    try:
        raw = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError("config", f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError("config", f"{path}: {exc}") from None
    return config_from_dict(raw, Path(path).resolve().parent)


def config_from_dict(raw: dict, base: Path = Path(".")) -> RunConfig:
    unknown = sorted(set(raw) - set(_TYPES))
    if unknown:
        raise InputError("config", f"unknown key(s) {unknown}")
    if "hamiltonian" not in raw:
        raise InputError("config", "missing required key 'hamiltonian'")
    for key, typ in _TYPES.items():
        if key not in raw:
            continue
        val = raw[key]
        ok = isinstance(val, typ) and not (typ is int and isinstance(val, bool))
        if typ is float and isinstance(val, int) and not isinstance(val, bool):
            ok = True
        if not ok:
            raise InputError("config", f"key '{key}' must be {typ.__name__}, got {type(val).__name__}")

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    cfg = RunConfig(hamiltonian=resolve(raw["hamiltonian"]), raw=dict(raw))
    for key in ("reference", "generators_per_iter", "ranking", "grad_threshold", "energy_threshold",
                "max_iterations", "max_inactive", "log_format", "seed", "effheff_m",
                "effheff_threshold", "drop_tolerance", "ordering"):
        if key in raw:
            setattr(cfg, key, raw[key])
    cfg.threads = int(raw.get("threads", os.environ.get(THREADS_ENV, 1)))
    if "corrections" in raw:
        cfg.corrections = tuple(str(c) for c in raw["corrections"])
    if "active_qubits" in raw:
        cfg.active_qubits = tuple(int(q) for q in raw["active_qubits"])
    if "output_dir" in raw:
        cfg.output_dir = resolve(raw["output_dir"])
    else:
        cfg.output_dir = base / "iqcc_out"
    if "checkpoint_dir" in raw:
        cfg.checkpoint_dir = resolve(raw["checkpoint_dir"])

    checks = [
        (cfg.generators_per_iter >= 1, "generators_per_iter must be >= 1"),
        (cfg.ranking in RANKINGS, f"ranking must be one of {list(RANKINGS)}"),
        (set(cfg.corrections) <= set(CORRECTIONS), f"corrections must be drawn from {list(CORRECTIONS)}"),
        (len(set(cfg.corrections)) == len(cfg.corrections), "corrections must not repeat"),
        (cfg.grad_threshold > 0, "grad_threshold must be > 0"),
        (cfg.energy_threshold >= 0, "energy_threshold must be >= 0"),
        (cfg.max_iterations >= 1, "max_iterations must be >= 1"),
        (cfg.max_inactive >= 0, "max_inactive must be >= 0"),
        (cfg.log_format in ("csv", "jsonl"), "log_format must be 'csv' or 'jsonl'"),
        (cfg.threads >= 1, "threads must be >= 1"),
        (cfg.effheff_m >= 1, "effheff_m must be >= 1"),
        (cfg.drop_tolerance >= 0, "drop_tolerance must be >= 0"),
        (cfg.ordering in ("interleaved", "blocked"), "ordering must be 'interleaved' or 'blocked'"),
        (cfg.active_qubits is not None or "max_inactive" not in raw, "max_inactive needs active_qubits"),
    ]
    for ok, msg in checks:
        if not ok:
            raise InputError("config", msg)
    if not cfg.hamiltonian.is_file():
        raise InputError("config", f"hamiltonian file {cfg.hamiltonian} not found")
    return cfg


def _load_hamiltonian(path: Path, reference: str, ordering: str = "interleaved"):
    """Operator and reference from an operator file or an FCIDUMP."""
    text = path.read_text(encoding="utf-8")
    try:
        if text.lstrip().upper().startswith("&FCI"):
            ints = parse_fcidump(text)
            op = jordan_wigner(ints, SpinOrbitalOrdering(ordering))
            hf = hf_reference(ints, SpinOrbitalOrdering(ordering))
        else:
            op = parse_operator(text)
            hf = None
    except (FCIDumpError, PauliError) as exc:
        raise InputError("input", f"{path}: {exc}") from None
    if reference == "hf":
        if hf is None:
            raise InputError("config", "reference 'hf' needs an FCIDUMP hamiltonian; give a +/- string")
        state = hf
    elif reference == "lowest":
        state = lowest_mean_field(op)
    else:
        try:
            state = MeanFieldState.from_string(reference)
        except PauliError as exc:
            raise InputError("config", str(exc)) from None
    if state.n_qubits != op.n_qubits:
        raise InputError("config", f"reference has {state.n_qubits} qubits, hamiltonian has {op.n_qubits}")
    return op, state


# --------------------------------------------------------------------------
# logging of iteration records

def log_columns(cfg: RunConfig) -> list[str]:
    cols = list(LOG_COLUMNS)
    if "effheff" in cfg.corrections:
        cols.append("e_" + correction_label("effheff", cfg.effheff_m))
    if "ci" in cfg.corrections:
        cols.append("e_ci")
    return cols


def _cell(rec: IterationRecord, col: str) -> str:
    if col == "iter":
        return str(rec.iteration)
    if col == "e_iqcc":
        return f"{rec.e_iqcc:.12f}"
    if col == "max_grad":
        return f"{rec.max_grad:.12e}"
    if col in ("n_terms", "n_groups"):
        return str(getattr(rec, col))
    val = rec.corrected.get(col[2:])
    return "" if val is None else f"{val:.12f}"


def format_log(records: Sequence[IterationRecord], cfg: RunConfig) -> str:
    cols = log_columns(cfg)
    lines = []
    if cfg.log_format == "csv":
        lines.append(",".join(cols))
        for rec in records:
            lines.append(",".join(_cell(rec, c) for c in cols))
    else:
        for rec in records:
            parts = []
            for c in cols:
                v = _cell(rec, c)
                parts.append(f'"{c}": {v if v else "null"}')
            lines.append("{" + ", ".join(parts) + "}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# checkpoints

def _write_checkpoint(cfg: RunConfig, records: list[IterationRecord], op: QubitOperator,
                      stop_reason: Optional[str]) -> None:
    d = cfg.checkpoint_path
    d.mkdir(parents=True, exist_ok=True)
    tmp = d / "hamiltonian.op.tmp"
    write_operator(op, tmp)
    os.replace(tmp, d / "hamiltonian.op")
    state = {
        "fingerprint": cfg.fingerprint(),
        "next_iteration": records[-1].iteration + 1 if records else 1,
        "stop_reason": stop_reason,
        "records": [r.to_dict() for r in records],
    }
    tmp = d / "state.json.tmp"
    tmp.write_text(json.dumps(state, indent=1), encoding="utf-8")
    os.replace(tmp, d / "state.json")


def _read_checkpoint(cfg: RunConfig):
    d = cfg.checkpoint_path
    try:
        state = json.loads((d / "state.json").read_text(encoding="utf-8"))
        op = read_operator(d / "hamiltonian.op")
    except FileNotFoundError:
        raise InputError("checkpoint", f"no checkpoint in {d}") from None
    except (ValueError, KeyError) as exc:
        raise InputError("checkpoint", f"unreadable checkpoint in {d}: {exc}") from None
    if state.get("fingerprint") != cfg.fingerprint():
        raise InputError("checkpoint", "checkpoint was written for a different configuration")
    records = [IterationRecord.from_dict(r) for r in state["records"]]
    return op, records, state.get("stop_reason")


# --------------------------------------------------------------------------
# subcommands

def cmd_map(args) -> int:
    path = Path(args.fcidump)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError("input", f"cannot read {path}: {exc.strerror}") from None
    try:
        ints = parse_fcidump(text)
    except FCIDumpError as exc:
        raise InputError("fcidump", f"{path}: {exc}") from None
    freeze = _int_list(args.freeze, "freeze")
    active = _int_list(args.active, "active") if args.active is not None else None
    if freeze or active is not None:
        try:
            ints = freeze_core(ints, freeze, active)
        except ValueError as exc:
            raise InputError("input", str(exc)) from None
    ordering = SpinOrbitalOrdering(args.ordering)
    op = jordan_wigner(ints, ordering, drop_tol=args.drop_tolerance)
    hf = hf_reference(ints, ordering)
    out = Path(args.output)
    write_operator(op, out)
    print(f"qubits {op.n_qubits}  terms {len(op)}  ising_components {len(ising_decompose(op))}  "
          f"hf_reference {hf.to_string()}  e_hf {expectation(op, hf):.12f}")
    return EXIT_OK


def _int_list(text: Optional[str], what: str) -> list[int]:
    if text is None or not text.strip():
        return []
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError("usage", f"--{what} expects comma-separated integers, got {text!r}") from None


def _read_op_arg(path: str) -> QubitOperator:
    try:
        return read_operator(path)
    except OSError as exc:
        raise InputError("input", f"cannot read {path}: {exc.strerror}") from None
    except PauliError as exc:
        raise InputError("input", f"{path}: {exc}") from None


def cmd_exact(args) -> int:
    op = _read_op_arg(args.operator)
    try:
        e, vec = ground_energy(op, method=args.method, seed=args.seed)
    except OracleError as exc:
        raise InputError("oracle", str(exc)) from None
    print(f"E {e:.12f}")
    if args.determinants is not None:
        for det, amp in dominant_determinants(vec, args.determinants):
            print(f"{det} {amp.real:+.10f} {amp.imag:+.10f} {abs(amp) ** 2:.10f}")
    return EXIT_OK


def cmd_correct(args) -> int:
    op = _read_op_arg(args.operator)
    if args.reference is None:
        state = lowest_mean_field(op)
    else:
        try:
            state = MeanFieldState.from_string(args.reference)
        except PauliError as exc:
            raise InputError("usage", str(exc)) from None
        if state.n_qubits != op.n_qubits:
            raise InputError("usage", f"reference has {state.n_qubits} qubits, operator has {op.n_qubits}")
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    bad = sorted(set(schemes) - set(CORRECTIONS))
    if bad:
        raise InputError("usage", f"unknown scheme(s) {bad}; choose from {list(CORRECTIONS)}")
    e0 = expectation(op, state)
    groups = rank(build_dis(op, state), args.ranking)
    values = compute_corrections(op, state, groups, schemes, args.ranking, args.m, e0=e0)
    print(f"reference {state.to_string()}  e0 {e0:.12f}  groups {len(groups)}")
    print(f"{'scheme':<12} {'delta_e':>18} {'energy':>18}")
    for name in schemes:
        key = correction_label(name, args.m)
        print(f"{key:<12} {values[key] - e0:>18.12f} {values[key]:>18.12f}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(Path(args.config))
    op, state = _load_hamiltonian(cfg.hamiltonian, cfg.reference, cfg.ordering)
    space = None
    if cfg.active_qubits is not None:
        space = ActiveSpace(cfg.active_qubits, cfg.max_inactive)
        try:
            space.validate(op.n_qubits)
        except ValueError as exc:
            raise InputError("config", str(exc)) from None

    records: list[IterationRecord] = []
    start = 1
    stop_reason = None
    if args.resume:
        op, records, stop_reason = _read_checkpoint(cfg)
        if stop_reason == "max_iterations":  # a raised cap lets the run continue
            stop_reason = None
        start = records[-1].iteration + 1 if records else 1
    iq = IQCCConfig(
        hamiltonian=op, reference=state, generators_per_iter=cfg.generators_per_iter,
        ranking=cfg.ranking, corrections=cfg.corrections, grad_threshold=cfg.grad_threshold,
        energy_threshold=cfg.energy_threshold or None, max_iterations=cfg.max_iterations,
        active_space=space, effheff_m=cfg.effheff_m, effheff_threshold=cfg.effheff_threshold,
        drop_tolerance=cfg.drop_tolerance,
    )
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    log_path = cfg.output_dir / f"log.{cfg.log_format}"
    wall0 = time.perf_counter()

    class _Pause(Exception):
        pass

    budget = [args.stop_after]

    def on_iteration(rec: IterationRecord, dressed: QubitOperator) -> None:
        records.append(rec)
        _write_checkpoint(cfg, records, dressed, None)
        log_path.write_text(format_log(records, cfg), encoding="utf-8")
        if budget[0] is not None:
            budget[0] -= 1
            if budget[0] <= 0:
                raise _Pause()

    result: Optional[IQCCResult] = None
    if stop_reason is None and start <= cfg.max_iterations:
        try:
            result = iterate(iq, start_iteration=start, previous=records[-1] if records else None,
                             on_iteration=on_iteration)
        except _Pause:
            print(f"paused after iteration {records[-1].iteration}; checkpoint in {cfg.checkpoint_path}")
            return EXIT_PAUSED
        except corr.ConvergenceError as exc:
            raise RuntimeError(f"correction solver: {exc}") from None
        stop_reason = result.stop_reason
        _write_checkpoint(cfg, records, result.hamiltonian, stop_reason)
    elif stop_reason is None:
        stop_reason = "max_iterations"
    log_path.write_text(format_log(records, cfg), encoding="utf-8")

    converged = stop_reason != "max_iterations"
    summary = {
        "converged": converged,
        "stop_reason": stop_reason,
        "iterations": len(records),
        "e_iqcc": records[-1].e_iqcc if records else None,
        "corrected": records[-1].corrected if records else {},
        "peak_terms": max([r.n_terms for r in records] + ([result.peak_terms] if result else [])),
        "phase_seconds": result.phase_times if result else {},
        "wall_seconds": time.perf_counter() - wall0,
        "backend": BACKEND,
        "threads": cfg.threads,
        "seed": cfg.seed,
    }
    (cfg.output_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    last = records[-1]
    print(f"{stop_reason} after {last.iteration} iteration(s): e_iqcc {last.e_iqcc:.12f}")
    return EXIT_OK if converged else EXIT_MAX_ITER


# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _diagnostic("usage", message)
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="iqcc", description="Iterative qubit coupled cluster with energy corrections.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("map", help="FCIDUMP -> qubit operator file (Jordan-Wigner)")
    m.add_argument("fcidump")
    m.add_argument("-o", "--output", required=True)
    m.add_argument("--ordering", choices=["interleaved", "blocked"], default="interleaved")
    m.add_argument("--freeze", default="", help="comma-separated 0-based core orbitals")
    m.add_argument("--active", default=None, help="comma-separated 0-based orbitals to keep")
    m.add_argument("--drop-tolerance", type=float, default=0.0)
    m.set_defaults(func=cmd_map)

    r = sub.add_parser("run", help="run iQCC from a TOML config")
    r.add_argument("config")
    r.add_argument("--resume", action="store_true", help="continue from the checkpoint")
    r.add_argument("--stop-after", type=int, default=None, help="pause after this many iterations")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("exact", help="exact ground energy of an operator file")
    e.add_argument("operator")
    e.add_argument("--determinants", type=float, default=None, metavar="THRESHOLD",
                   help="also list basis states with |amplitude| >= THRESHOLD")
    e.add_argument("--method", choices=["auto", "dense", "lanczos"], default="auto")
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_exact)

    c = sub.add_parser("correct", help="one-shot corrections on a mean-field reference")
    c.add_argument("operator")
    c.add_argument("--reference", default=None, help="+/- string; default is the lowest mean-field state")
    c.add_argument("--schemes", default="en2,duc,bw,ci")
    c.add_argument("--m", type=int, default=2, help="block size for effheff")
    c.add_argument("--ranking", choices=list(RANKINGS), default="gradient")
    c.set_defaults(func=cmd_correct)
    return p


def _join_reference(argv: list[str]) -> list[str]:
    """Let ``--reference --++`` through: argparse reads a leading dash as an option."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--reference" and i + 1 < len(argv):
            out.append("--reference=" + argv[i + 1])
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = _join_reference(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except InputError as exc:
        _diagnostic(exc.kind, exc)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        _diagnostic("input", exc)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort diagnostic
        _diagnostic("runtime", f"{type(exc).__name__}: {exc}")
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
