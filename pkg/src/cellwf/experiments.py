"""Seeded Monte Carlo sweeps over antenna count and circuit power.

Every (sweep point, trial) cell draws its channel from a seed derived
deterministically from the sweep seed, so results are reproducible across
runs and across worker counts, and all schemes within a cell are scored on
the identical realization (paired comparison).

Sweep semantics differ by variable:

- ``antennas``: energy efficiency and sum rate are measured at the
  configured flexible power; the transmit-power column reports the minimum
  flexible power at which each scheme reaches a fixed target sum rate
  (auto-calibrated from the first sweep point unless given).
- ``p_circuit_dbm``: the circuit power only enters the efficiency
  denominator, so each trial's realization and allocation are shared
  across all sweep points and only the efficiency is re-evaluated. This
  makes the efficiency decrease across points exact trial by trial.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .configio import ConfigError, SYSTEM_KEYS, parse_system_config, system_to_boundary
from .model import ChannelRealization, SystemConfig, compute_rates, dbm_to_watt, generate_realization
from .waterfill import (
    ALL_SCHEMES,
    SCHEME_EQUAL_SPLIT,
    SCHEME_PROPOSED,
    SCHEME_SINGLE_ZONE,
    allocate_baseline_equal,
    allocate_scheme,
    partition_zones,
    waterfill_exact,
)

__all__ = [
    "VARIABLE_ANTENNAS",
    "VARIABLE_CIRCUIT_POWER",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "derive_trial_seed",
    "run_sweep",
    "emit_csv",
    "rows_to_csv",
    "write_metadata",
    "parse_sweep_config",
    "sweep_to_boundary",
]

VARIABLE_ANTENNAS = "antennas"
VARIABLE_CIRCUIT_POWER = "p_circuit_dbm"
_VARIABLES = (VARIABLE_ANTENNAS, VARIABLE_CIRCUIT_POWER)

CSV_COLUMNS = ("variable", "value", "scheme", "ee_mean", "ee_stderr",
               "sumrate_mean", "ptx_mw_mean", "iters_mean", "fail_rate")

_SWEEP_KEYS = frozenset({"variable", "values", "trials", "schemes", "seed",
                         "target_sum_rate"})

# Margin below the calibrated mean sum rate, so the target stays reachable
# for below-average draws at the smallest antenna count.
_TARGET_MARGIN = 0.75
_BISECT_STEPS = 60


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: a variable, its grid, and the Monte Carlo settings."""

    variable: str
    values: tuple
    trials: int
    schemes: tuple[str, ...]
    base_config: SystemConfig
    seed: int
    target_sum_rate: float | None = None

    def __post_init__(self) -> None:
        if self.variable not in _VARIABLES:
            raise ConfigError(f'variable must be one of {_VARIABLES}, got "{self.variable}"')
        values = tuple(self.values)
        if not values:
            raise ConfigError("values must be nonempty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("values must be strictly increasing")
        if self.variable == VARIABLE_ANTENNAS:
            if any(not isinstance(v, int) or isinstance(v, bool) or v < 1 for v in values):
                raise ConfigError("antenna counts must be positive integers")
        object.__setattr__(self, "values", values)
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        schemes = tuple(self.schemes)
        if not schemes:
            raise ConfigError("schemes must be nonempty")
        if len(set(schemes)) != len(schemes):
            raise ConfigError("schemes must not repeat")
        unknown = [s for s in schemes if s not in ALL_SCHEMES]
        if unknown:
            raise ConfigError(f'unknown scheme "{unknown[0]}"; expected {ALL_SCHEMES}')
        object.__setattr__(self, "schemes", schemes)
        if self.target_sum_rate is not None and self.target_sum_rate <= 0:
            raise ConfigError("target_sum_rate must be positive")


@dataclass(frozen=True)
class SweepRow:
    """Aggregated statistics for one (sweep value, scheme) cell."""

    variable: str
    value: float
    scheme: str
    ee_mean: float
    ee_stderr: float
    sumrate_mean: float
    ptx_mw_mean: float
    iters_mean: float
    fail_rate: float
    # Retained for analysis; not part of the CSV schema.
    sumrate_stderr: float = 0.0
    ptx_mw_stderr: float = 0.0


@dataclass
class SweepResult:
    """Sweep output: CSV-shaped rows plus per-trial samples for analysis."""

    spec: SweepSpec
    rows: list[SweepRow]
    trials: dict[tuple[Any, str], dict[str, np.ndarray]]
    target_sum_rate: float | None
    wall_clock_seconds: float


def derive_trial_seed(base_seed: int, point_index: int, trial_index: int) -> int:
    """Stable 64-bit seed for one Monte Carlo cell."""
    mask = (1 << 64) - 1
    payload = struct.pack("<QQQ", base_seed & mask, point_index & mask, trial_index & mask)
    digest = hashlib.sha256(b"cellwf.trial" + payload).digest()
    return int.from_bytes(digest[:8], "little")


# ---------------------------------------------------------------------------
# Per-cell evaluation (top-level functions so worker processes can run them)
# ---------------------------------------------------------------------------

def _fast_rho(real: ChannelRealization, config: SystemConfig, scheme: str,
              p_flex: float) -> np.ndarray:
    """Scheme allocation at flexible power ``p_flex``, via the direct solver.

    Used inside the power bisection where iteration diagnostics are not
    needed; for the zoned scheme the per-zone optimum is identical to the
    iterative solver's fixed point.
    """
    n_clusters = real.num_clusters
    p_cluster = p_flex / n_clusters
    rho = np.zeros_like(real.snr_ratios)
    for m in range(n_clusters):
        c = real.snr_ratios[m]
        if scheme == SCHEME_SINGLE_ZONE:
            rho[m], _ = waterfill_exact(c, p_cluster / config.p_max)
            continue
        part = partition_zones(real.distances[m], config.cell_radius, p_cluster, config.p_max)
        if scheme == SCHEME_EQUAL_SPLIT:
            rho[m] = allocate_baseline_equal(part)
        else:
            for mask, budget in ((part.near_mask, part.near_budget),
                                 (part.far_mask, part.far_budget)):
                if mask.any() and budget > 0:
                    rho[m][mask] = waterfill_exact(c[mask], budget)[0]
    return rho


def _sum_rate_at(real: ChannelRealization, config: SystemConfig, scheme: str,
                 p_flex: float) -> float:
    rho = _fast_rho(real, config, scheme, p_flex)
    return compute_rates(real, rho, config).sum_rate


def _power_for_target(real: ChannelRealization, config: SystemConfig,
                      scheme: str, target: float) -> float:
    """Minimum flexible power reaching the target sum rate, capped at p_max."""
    hi = config.p_max
    if _sum_rate_at(real, config, scheme, hi) < target:
        return hi
    lo = 0.0
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0:
            break
        if _sum_rate_at(real, config, scheme, mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def _solve_cell(real: ChannelRealization, config: SystemConfig, scheme: str,
                tolerance: float, max_iterations: int):
    """One scheme on one realization: report plus solver diagnostics."""
    alloc, solutions = allocate_scheme(real, config, scheme,
                                       tolerance=tolerance, max_iterations=max_iterations)
    report = compute_rates(real, alloc, config)
    duals = [s.dual for s in solutions if s.dual is not None]
    iters = float(np.mean([d.iterations_used for d in duals])) if duals else 0.0
    converged = all(d.converged for d in duals)
    return report, iters, converged


def _antenna_pass1_cell(args) -> list[tuple[float, float, float, float, bool]]:
    config, seed, schemes, tolerance, max_iterations = args
    real = generate_realization(config, seed)
    out = []
    for scheme in schemes:
        report, iters, converged = _solve_cell(real, config, scheme, tolerance, max_iterations)
        out.append((report.energy_efficiency, report.sum_rate,
                    report.total_transmit_power, iters, converged))
    return out


def _antenna_pass2_cell(args) -> list[float]:
    config, seed, schemes, target = args
    real = generate_realization(config, seed)
    return [_power_for_target(real, config, scheme, target) for scheme in schemes]


def _circuit_cell(args) -> list[tuple[float, float, float, bool]]:
    config, seed, schemes, tolerance, max_iterations = args
    real = generate_realization(config, seed)
    out = []
    for scheme in schemes:
        report, iters, converged = _solve_cell(real, config, scheme, tolerance, max_iterations)
        out.append((report.sum_rate, report.total_transmit_power, iters, converged))
    return out


def _map_cells(fn: Callable, args_list: Sequence, workers: int) -> list:
    if workers <= 1:
        return [fn(a) for a in args_list]
    chunk = max(1, len(args_list) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list, chunksize=chunk))


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def _mean_stderr(samples: np.ndarray, ok: np.ndarray) -> tuple[float, float]:
    sel = samples[ok]
    if sel.size == 0:
        return float("nan"), float("nan")
    mean = float(sel.mean())
    stderr = float(sel.std(ddof=1) / np.sqrt(sel.size)) if sel.size > 1 else 0.0
    return mean, stderr


def _make_row(spec: SweepSpec, value, scheme: str,
              cell: dict[str, np.ndarray]) -> SweepRow:
    ok = cell["converged"]
    ee_mean, ee_err = _mean_stderr(cell["ee"], ok)
    sr_mean, sr_err = _mean_stderr(cell["sumrate"], ok)
    ptx_mean, ptx_err = _mean_stderr(cell["ptx_mw"], ok)
    iters_mean, _ = _mean_stderr(cell["iters"], ok)
    return SweepRow(
        variable=spec.variable,
        value=value,
        scheme=scheme,
        ee_mean=ee_mean,
        ee_stderr=ee_err,
        sumrate_mean=sr_mean,
        ptx_mw_mean=ptx_mean,
        iters_mean=iters_mean,
        fail_rate=float(1.0 - ok.mean()),
        sumrate_stderr=sr_err,
        ptx_mw_stderr=ptx_err,
    )


def _run_antenna_sweep(spec: SweepSpec, workers: int, tolerance: float,
                       max_iterations: int):
    schemes = spec.schemes
    trials = spec.trials
    per_point_config = [replace(spec.base_config, num_bs_antennas=m) for m in spec.values]
    seeds = [[derive_trial_seed(spec.seed, pi, ti) for ti in range(trials)]
             for pi in range(len(spec.values))]

    # Pass 1: efficiency and rate at the configured flexible power.
    pass1: list[list] = []
    for pi, config in enumerate(per_point_config):
        args = [(config, seeds[pi][ti], schemes, tolerance, max_iterations)
                for ti in range(trials)]
        pass1.append(_map_cells(_antenna_pass1_cell, args, workers))

    target = spec.target_sum_rate
    if target is None:
        # Calibrate from the first point's zoned scheme (or the first
        # requested scheme if the zoned one is not part of the sweep).
        ref = SCHEME_PROPOSED if SCHEME_PROPOSED in schemes else schemes[0]
        si = schemes.index(ref)
        rates = np.array([pass1[0][ti][si][1] for ti in range(trials)])
        target = _TARGET_MARGIN * float(rates.mean())

    # Pass 2: minimum flexible power reaching the target rate.
    pass2: list[list] = []
    for pi, config in enumerate(per_point_config):
        args = [(config, seeds[pi][ti], schemes, target) for ti in range(trials)]
        pass2.append(_map_cells(_antenna_pass2_cell, args, workers))

    cells: dict[tuple[Any, str], dict[str, np.ndarray]] = {}
    for pi, value in enumerate(spec.values):
        for si, scheme in enumerate(schemes):
            ee = np.array([pass1[pi][ti][si][0] for ti in range(trials)]) / 1e6
            sumrate = np.array([pass1[pi][ti][si][1] for ti in range(trials)])
            iters = np.array([pass1[pi][ti][si][3] for ti in range(trials)])
            converged = np.array([pass1[pi][ti][si][4] for ti in range(trials)], dtype=bool)
            ptx_mw = np.array([pass2[pi][ti][si] for ti in range(trials)]) * 1e3
            cells[(value, scheme)] = {
                "ee": ee, "sumrate": sumrate, "ptx_mw": ptx_mw,
                "iters": iters, "converged": converged,
            }
    return cells, target


def _run_circuit_sweep(spec: SweepSpec, workers: int, tolerance: float,
                       max_iterations: int):
    schemes = spec.schemes
    trials = spec.trials
    config = spec.base_config
    # The circuit power never touches the channel or the solve, so each
    # trial's realization is shared by every sweep point.
    seeds = [derive_trial_seed(spec.seed, 0, ti) for ti in range(trials)]
    args = [(config, seeds[ti], schemes, tolerance, max_iterations) for ti in range(trials)]
    solved = _map_cells(_circuit_cell, args, workers)

    cells: dict[tuple[Any, str], dict[str, np.ndarray]] = {}
    for value in spec.values:
        p_circuit = dbm_to_watt(float(value))
        for si, scheme in enumerate(schemes):
            sumrate = np.array([solved[ti][si][0] for ti in range(trials)])
            ptx_w = np.array([solved[ti][si][1] for ti in range(trials)])
            iters = np.array([solved[ti][si][2] for ti in range(trials)])
            converged = np.array([solved[ti][si][3] for ti in range(trials)], dtype=bool)
            ee = config.bandwidth * sumrate / (p_circuit + ptx_w) / 1e6
            cells[(value, scheme)] = {
                "ee": ee, "sumrate": sumrate, "ptx_mw": ptx_w * 1e3,
                "iters": iters, "converged": converged,
            }
    return cells, spec.target_sum_rate


def run_sweep(spec: SweepSpec, *, workers: int = 1, tolerance: float = 1e-8,
              max_iterations: int = 100_000) -> SweepResult:
    """Run a sweep and aggregate per-cell statistics.

    Trials whose iterative solve does not converge count toward the
    failure rate and are excluded from the means. Identical specs produce
    identical results for any ``workers`` value.
    """
    t0 = time.perf_counter()
    if spec.variable == VARIABLE_ANTENNAS:
        cells, target = _run_antenna_sweep(spec, workers, tolerance, max_iterations)
    else:
        cells, target = _run_circuit_sweep(spec, workers, tolerance, max_iterations)

    rows = [_make_row(spec, value, scheme, cells[(value, scheme)])
            for value in spec.values for scheme in spec.schemes]
    return SweepResult(
        spec=spec,
        rows=rows,
        trials=cells,
        target_sum_rate=target,
        wall_clock_seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


def rows_to_csv(rows: Sequence[SweepRow], path) -> Path:
    """Write rows in the fixed CSV schema, one line per (value, scheme).

    Ordering and formatting (9 significant digits) are deterministic, so
    equal rows produce byte-identical files.
    """
    if not rows:
        raise ValueError("refusing to write an empty sweep result")
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row.variable, _fmt(row.value), row.scheme,
                _fmt(row.ee_mean), _fmt(row.ee_stderr), _fmt(row.sumrate_mean),
                _fmt(row.ptx_mw_mean), _fmt(row.iters_mean), _fmt(row.fail_rate),
            ])
    return path


def emit_csv(result: SweepResult, path) -> Path:
    """Write a sweep result's CSV report (see `rows_to_csv`)."""
    return rows_to_csv(result.rows, path)


def write_metadata(result: SweepResult, path) -> Path:
    """Write the JSON sidecar: spec echo, version, wall clock, notes."""
    doc = {
        "version": __version__,
        "spec": sweep_to_boundary(result.spec),
        "target_sum_rate": result.target_sum_rate,
        "wall_clock_seconds": result.wall_clock_seconds,
        "notes": {
            "schemes": {
                "proposed": "zone split at half the cell radius plus per-zone water-filling",
                "equal_split": "proxy baseline: each zone's budget divided equally among its users",
                "single_zone": "ablation baseline: water-filling over the whole cluster, no zone split",
            },
            "ptx_semantics": (
                "antennas sweep: minimum flexible power reaching the target sum rate; "
                "p_circuit_dbm sweep: power spent at the configured flexible budget"
            ),
            "ee_units": "Mbit/J",
            "ptx_units": "mW",
        },
    }
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def parse_sweep_config(doc: dict[str, Any]) -> SweepSpec:
    """Build a `SweepSpec` from a flat boundary document."""
    if not isinstance(doc, dict):
        raise ConfigError("sweep config must be a JSON object")
    unknown = set(doc) - _SWEEP_KEYS - SYSTEM_KEYS
    if unknown:
        raise ConfigError(f'unknown config key "{sorted(unknown)[0]}"')
    for key in ("variable", "values"):
        if key not in doc:
            raise ConfigError(f'missing required config key "{key}"')

    base = parse_system_config({k: v for k, v in doc.items() if k in SYSTEM_KEYS})
    values = doc["values"]
    if not isinstance(values, list):
        raise ConfigError('config key "values" must be a list')
    target = doc.get("target_sum_rate")
    return SweepSpec(
        variable=doc["variable"],
        values=tuple(values),
        trials=int(doc.get("trials", 500)),
        schemes=tuple(doc.get("schemes", list(ALL_SCHEMES))),
        base_config=base,
        seed=int(doc.get("seed", 0)),
        target_sum_rate=None if target is None else float(target),
    )


def sweep_to_boundary(spec: SweepSpec) -> dict[str, Any]:
    """Echo a `SweepSpec` as a flat boundary document."""
    doc = system_to_boundary(spec.base_config)
    doc.update({
        "variable": spec.variable,
        "values": list(spec.values),
        "trials": spec.trials,
        "schemes": list(spec.schemes),
        "seed": spec.seed,
        "target_sum_rate": spec.target_sum_rate,
    })
    return doc
