"""Parameter scans producing deterministic result tables.

Each scan expands a :class:`ScanConfig` into grid points, evaluates them
(optionally on a process pool sized by ``BERRYPHASE_WORKERS``), and returns
rows in grid order.  Numerical-precondition failures at a single point become
a row ``flag`` instead of aborting the scan.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .adiabatic import (
    AdiabaticSchedule,
    build_heisenberg_loop,
    build_ssh_loop,
    calibrate_dt,
    reference_loop_phase,
)
from .compiler import prepare_state
from .config import ScanConfig
from .errors import AdiabaticityError, ConfigError, DegeneracyError, NumericalPreconditionError, TrotterError
from .models import (
    HeisenbergParams,
    SshParams,
    exact_diagonalize,
    heisenberg_terms,
    ssh_berry_phase_analytic,
    ssh_ground_state,
)
from .phase_estimation import hadamard_test, ipea
from .validation import energy_check, parity_check

WORKERS_ENV = "BERRYPHASE_WORKERS"
PROVENANCE = ["config_hash", "seed", "version"]

SSH_COLUMNS = [
    "index", "v_over_w", "v", "w", "dt", "analytic_phase", "noiseless_phase", "fidelity",
    "sampled_phase", "sampled_phase_err", "shot_error", "ipea_phase", "ipea_circ_std", "ipea_bits", "flag",
]
HEISENBERG_COLUMNS = [
    "index", "n_spins", "delta", "dt", "circuit_phase", "circuit_phase_err", "reference_phase",
    "abs_difference", "fidelity", "min_gap", "flag",
]
FINITE_SIZE_COLUMNS = [
    "index", "n_spins", "delta", "dt", "reference_phase", "deviation", "fidelity", "min_gap", "flag",
]
ENERGY_COLUMNS = [
    "index", "n_spins", "delta", "energy_estimate", "reference_energy", "abs_error", "slope_stderr",
    "resolution_bound", "max_residual", "passed", "flag",
]
PARITY_COLUMNS = [
    "index", "n_spins", "delta", "p_ancilla_zero", "zeros", "shots", "expected_bit", "passed", "flag",
]


@dataclass
class ScanResult:
    experiment: str
    columns: list[str]
    rows: list[dict[str, Any]]
    config: ScanConfig
    summary: dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> list:
        return [r.get(name) for r in self.rows]


def _flag(exc: Exception) -> str:
    if isinstance(exc, DegeneracyError):
        return "degenerate"
    if isinstance(exc, AdiabaticityError):
        return "adiabaticity"
    if isinstance(exc, TrotterError):
        return "trotter"
    return type(exc).__name__


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1")
    return n


def _map(fn: Callable, tasks: Sequence) -> list:
    n = min(worker_count(), len(tasks))
    if n <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks))  # map preserves task order


def _schedule(cfg: ScanConfig, dt: float) -> AdiabaticSchedule:
    s = cfg.schedule
    return AdiabaticSchedule(s.n_steps, dt, s.n_trotter, s.split)


# ------------------------------------------------------------------- SSH scan


def _ssh_point(task: tuple[int, float, ScanConfig]) -> dict[str, Any]:
    i, ratio, cfg = task
    w = cfg.model.w
    v = ratio * w
    row: dict[str, Any] = {"index": i, "v_over_w": ratio, "v": v, "w": w}
    if math.isclose(ratio, 1.0, rel_tol=0.0, abs_tol=1e-12):
        row["flag"] = "ill-defined"
        return row
    row["analytic_phase"] = ssh_berry_phase_analytic(v, w)
    params = SshParams(v, w, 0.0)
    try:
        base = _schedule(cfg, 1.0)
        dt = calibrate_dt(params, base) if cfg.schedule.dt == "auto" else float(cfg.schedule.dt)
        sched = base.with_dt(dt)
        row["dt"] = dt
        ref = reference_loop_phase(params, sched, check_adiabatic=False)
        row["fidelity"] = ref.fidelity
        loop = build_ssh_loop(v, w, sched)
    except NumericalPreconditionError as exc:
        row["flag"] = _flag(exc)
        return row
    init = prepare_state(ssh_ground_state(params)).circuit
    seed = cfg.seed + i
    row["noiseless_phase"] = hadamard_test(init, loop, cfg.shots, seed, "analytic").phase
    if cfg.readout in ("shots", "ipea"):
        sampled = hadamard_test(init, loop, cfg.shots, seed, "shots")
        row.update(sampled_phase=sampled.phase, sampled_phase_err=sampled.phase_error, shot_error=sampled.shot_error)
    if cfg.readout == "ipea":
        res = ipea(init, loop, cfg.r_iterations, cfg.shots, seed, "shots")
        row.update(ipea_phase=res.phase, ipea_circ_std=res.circ_std, ipea_bits=res.bitstring)
    if ref.fidelity < cfg.schedule.min_fidelity:
        row["flag"] = "adiabaticity"
    return row


def run_ssh_scan(cfg: ScanConfig) -> ScanResult:
    rows = _map(_ssh_point, [(i, r, cfg) for i, r in enumerate(cfg.model.v_over_w)])
    return ScanResult("ssh_scan", SSH_COLUMNS, rows, cfg)


# ------------------------------------------------------------ Heisenberg scan


def _heisenberg_params(cfg: ScanConfig, n: int, delta: float) -> HeisenbergParams:
    m = cfg.model
    return HeisenbergParams(n, m.J, delta, 0.0, m.twisted_bond, m.boundary)


def _grid(cfg: ScanConfig) -> list[tuple[int, int, float, ScanConfig]]:
    pts = [(n, d) for n in cfg.model.n_spins for d in cfg.model.deltas]
    return [(i, n, d, cfg) for i, (n, d) in enumerate(pts)]


def _heisenberg_point(task) -> dict[str, Any]:
    i, n, delta, cfg = task
    row: dict[str, Any] = {"index": i, "n_spins": n, "delta": delta, "dt": float(cfg.schedule.dt)}
    params = _heisenberg_params(cfg, n, delta)
    sched = _schedule(cfg, float(cfg.schedule.dt))
    flags = []
    try:
        ref = reference_loop_phase(params, sched, check_adiabatic=False)
    except NumericalPreconditionError as exc:
        row["flag"] = _flag(exc)
        return row
    row.update(reference_phase=ref.phase, fidelity=ref.fidelity, min_gap=ref.min_gap)
    if ref.fidelity < cfg.schedule.min_fidelity:
        flags.append("adiabaticity")
    try:
        loop = build_heisenberg_loop(params, sched, cfg.schedule.trotter_tolerance)
    except NumericalPreconditionError as exc:
        row["flag"] = ";".join(flags + [_flag(exc)])
        return row
    init = prepare_state(exact_diagonalize(heisenberg_terms(params), n).ground_state).circuit
    seed = cfg.seed + i
    if cfg.readout == "ipea":
        res = ipea(init, loop, cfg.r_iterations, cfg.shots, seed, "shots")
        phase, err = res.phase, 2 * math.pi * res.circ_std
    else:
        ht = hadamard_test(init, loop, cfg.shots, seed, cfg.readout)
        phase, err = ht.phase, ht.phase_error
    row.update(circuit_phase=phase, circuit_phase_err=err, abs_difference=abs(phase - ref.phase))
    if flags:
        row["flag"] = ";".join(flags)
    return row


def run_heisenberg_scan(cfg: ScanConfig) -> ScanResult:
    rows = _map(_heisenberg_point, _grid(cfg))
    return ScanResult("heisenberg_scan", HEISENBERG_COLUMNS, rows, cfg)


# ---------------------------------------------------------------- finite size


def _finite_size_point(task) -> dict[str, Any]:
    i, n, delta, cfg = task
    row: dict[str, Any] = {"index": i, "n_spins": n, "delta": delta, "dt": float(cfg.schedule.dt)}
    try:
        ref = reference_loop_phase(_heisenberg_params(cfg, n, delta), _schedule(cfg, float(cfg.schedule.dt)),
                                   check_adiabatic=False)
    except NumericalPreconditionError as exc:
        row["flag"] = _flag(exc)
        return row
    row.update(reference_phase=ref.phase, fidelity=ref.fidelity, min_gap=ref.min_gap)
    if delta < 0:
        row["deviation"] = math.pi - ref.phase
    elif delta > 0:
        row["deviation"] = ref.phase
    if ref.fidelity < cfg.schedule.min_fidelity:
        row["flag"] = "adiabaticity"
    return row


def finite_size_trend(rows: Sequence[dict[str, Any]]) -> dict[str, bool]:
    """For each nonzero ``delta``: does the deviation strictly fall as ``n_spins`` grows?"""
    out: dict[str, bool] = {}
    for delta in sorted({r["delta"] for r in rows if r["delta"] != 0}):
        pts = sorted((r["n_spins"], r.get("deviation")) for r in rows if r["delta"] == delta)
        devs = [d for _, d in pts]
        ok = len(devs) > 1 and None not in devs and all(b < a for a, b in zip(devs, devs[1:]))
        out[f"{delta:g}"] = ok
    return out


def run_finite_size(cfg: ScanConfig) -> ScanResult:
    rows = _map(_finite_size_point, _grid(cfg))
    return ScanResult("finite_size", FINITE_SIZE_COLUMNS, rows, cfg, {"monotone_decrease": finite_size_trend(rows)})


# ------------------------------------------------------------ sanity checks


def _counts_readout(cfg: ScanConfig) -> str:
    return "analytic" if cfg.readout == "analytic" else "shots"


def _energy_point(task) -> dict[str, Any]:
    i, n, delta, cfg = task
    row: dict[str, Any] = {"index": i, "n_spins": n, "delta": delta}
    try:
        res = energy_check(_heisenberg_params(cfg, n, delta), cfg.r_iterations, seed=cfg.seed + i,
                           readout=_counts_readout(cfg), shots=cfg.shots)
    except NumericalPreconditionError as exc:
        row["flag"] = _flag(exc)
        return row
    row.update(
        energy_estimate=res.energy, reference_energy=res.reference_energy, abs_error=res.abs_error,
        slope_stderr=res.slope_stderr, resolution_bound=res.resolution_bound, max_residual=res.max_residual,
        passed=res.passed,
    )
    return row


def run_energy_check(cfg: ScanConfig) -> ScanResult:
    rows = _map(_energy_point, _grid(cfg))
    return ScanResult("energy_check", ENERGY_COLUMNS, rows, cfg)


def _parity_point(task) -> dict[str, Any]:
    i, n, delta, cfg = task
    row: dict[str, Any] = {"index": i, "n_spins": n, "delta": delta}
    try:
        gs = exact_diagonalize(heisenberg_terms(_heisenberg_params(cfg, n, delta)), n).ground_state
    except NumericalPreconditionError as exc:
        row["flag"] = _flag(exc)
        return row
    res = parity_check(prepare_state(gs).circuit, n, cfg.shots, cfg.seed + i, readout=_counts_readout(cfg))
    row.update(p_ancilla_zero=res.p_ancilla_zero, zeros=res.counts[0], shots=res.counts.total_shots,
               expected_bit=res.expected_bit, passed=res.passed)
    return row


def run_parity_check(cfg: ScanConfig) -> ScanResult:
    rows = _map(_parity_point, _grid(cfg))
    return ScanResult("parity_check", PARITY_COLUMNS, rows, cfg)


RUNNERS: dict[str, Callable[[ScanConfig], ScanResult]] = {
    "ssh_scan": run_ssh_scan,
    "heisenberg_scan": run_heisenberg_scan,
    "finite_size": run_finite_size,
    "energy_check": run_energy_check,
    "parity_check": run_parity_check,
}


def run_scan(cfg: ScanConfig) -> ScanResult:
    return RUNNERS[cfg.experiment](cfg)


# --------------------------------------------------------------------- output


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.12g" % value
    return str(value)


def to_csv(result: ScanResult) -> str:
    """CSV text with floats at 12 significant digits and provenance columns appended."""
    cols = result.columns + PROVENANCE
    prov = {"config_hash": result.config.config_hash(), "seed": result.config.seed, "version": __version__}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in result.rows:
        full = {**row, **prov}
        writer.writerow([_fmt(full.get(c)) for c in cols])
    return buf.getvalue()


def sidecar(result: ScanResult) -> dict[str, Any]:
    return {
        "experiment": result.experiment,
        "config": result.config.to_dict(),
        "config_hash": result.config.config_hash(),
        "version": __version__,
        "workers_env": WORKERS_ENV,
        "columns": result.columns + PROVENANCE,
        "summary": result.summary,
    }


def write_outputs(result: ScanResult, path: str | Path) -> tuple[Path, Path]:
    """Write ``path`` (CSV) and ``path`` with a ``.json`` suffix (resolved config)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv(result))
    meta = path.with_suffix(".json")
    meta.write_text(json.dumps(sidecar(result), indent=2, sort_keys=True) + "\n")
    return path, meta
