"""Acceptance suite.

Each test prints one PASS/FAIL line per criterion (inline under -s,
in the captured-output section otherwise). The solver criteria
check the iterative method against the direct active-set solution and the
stationarity structure of the optimum; the sweep criteria check the
qualitative directions the harness is expected to reproduce, on the stock
configuration, plus byte-level reproducibility of the reports.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from cellwf.experiments import SweepSpec, emit_csv, run_sweep
from cellwf.model import SystemConfig
from cellwf.waterfill import (
    partition_zones,
    solve_iterative,
    waterfill_exact,
    waterfill_objective,
)

ANTENNA_VALUES = (150, 220, 345)
CIRCUIT_VALUES = (2, 4, 6, 8, 10)
TRIALS = 500
SCHEMES = ("proposed", "equal_split", "single_zone")


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"FAIL {name}", flush=True)
        raise
    print(f"PASS {name}", flush=True)


def random_instance(rng):
    """Random zoned instance: 2..16 users, gains over three decades."""
    z = int(rng.integers(2, 17))
    c = 10 ** rng.uniform(0.0, 3.0, z)
    radius = 1000.0
    d = rng.uniform(radius / 20.0, radius, z)
    p_transmit = float(rng.uniform(0.05, 1.0))
    part = partition_zones(d, radius, p_transmit, 1.0)
    return c, part


def exact_per_zone(c, part):
    rho = np.zeros_like(c)
    levels = {}
    for name, mask, budget in (("near", part.near_mask, part.near_budget),
                               ("far", part.far_mask, part.far_budget)):
        if mask.any():
            rho[mask], levels[name] = waterfill_exact(c[mask], budget)
    return rho, levels


@pytest.fixture(scope="module")
def solved_instances():
    rng = np.random.default_rng(20240817)
    instances = [random_instance(rng) for _ in range(1000)]
    t0 = time.perf_counter()
    solved = [solve_iterative(c, part) for c, part in instances]
    elapsed = time.perf_counter() - t0
    return instances, solved, elapsed


@pytest.fixture(scope="module")
def antenna_sweep():
    spec = SweepSpec(
        variable="antennas",
        values=ANTENNA_VALUES,
        trials=TRIALS,
        schemes=SCHEMES,
        base_config=SystemConfig(rng_seed=0),
        seed=2024,
    )
    t0 = time.perf_counter()
    result = run_sweep(spec)
    return result, time.perf_counter() - t0


@pytest.fixture(scope="module")
def circuit_sweep():
    spec = SweepSpec(
        variable="p_circuit_dbm",
        values=CIRCUIT_VALUES,
        trials=TRIALS,
        schemes=SCHEMES,
        base_config=SystemConfig(rng_seed=0),
        seed=2024,
    )
    return run_sweep(spec)


def test_oracle_equivalence_on_random_instances(solved_instances):
    instances, solved, elapsed = solved_instances
    with criterion("oracle equivalence: iterative solver matches the exact "
                   "solution within 1e-5 on >= 99% of 1000 instances in < 10 s"):
        converged = sum(dual.converged for _, dual in solved)
        assert converged >= 990
        worst = 0.0
        for (c, part), (rho, dual) in zip(instances, solved):
            if not dual.converged:
                continue
            ref, _ = exact_per_zone(c, part)
            worst = max(worst, float(np.max(np.abs(rho - ref))))
        assert worst <= 1e-5, f"worst elementwise gap {worst:.2e}"
        assert elapsed < 10.0, f"solve time {elapsed:.2f}s"


def test_stationarity_and_budget_conditions(solved_instances):
    instances, solved, _ = solved_instances
    with criterion("stationarity suite: water level, slackness (1e-6) and "
                   "budget residual (1e-6 * flexible power) on 100% of "
                   "converged instances"):
        checked = 0
        for (c, part), (rho, dual) in zip(instances, solved):
            if not dual.converged:
                continue
            checked += 1
            p_t = part.p_transmit
            for lam, mask, budget in ((dual.lambda1, part.near_mask, part.near_budget),
                                      (dual.lambda2, part.far_mask, part.far_budget)):
                if not mask.any():
                    continue
                assert lam >= 0
                level = 1.0 / lam
                zone_rho, zone_c = rho[mask], c[mask]
                active = zone_rho > 0
                if active.any():
                    gaps = np.abs(zone_rho[active] + 1.0 / zone_c[active] - level)
                    assert np.max(gaps) <= 1e-6
                if (~active).any():
                    assert np.all(1.0 / zone_c[~active] >= level - 1e-6)
                residual = abs(part.p_max * zone_rho.sum() - budget * part.p_max)
                assert residual <= 1e-6 * p_t
        assert checked > 0


def test_optimality_against_random_feasible_allocations():
    rng = np.random.default_rng(77)
    with criterion("optimality: the exact solution beats 10^4 random "
                   "same-budget allocations on 200 instances, zero violations"):
        for _ in range(200):
            c, part = random_instance(rng)
            rho, _ = exact_per_zone(c, part)
            best = waterfill_objective(c, rho)
            samples = np.zeros((10_000, c.size))
            for mask, budget in ((part.near_mask, part.near_budget),
                                 (part.far_mask, part.far_budget)):
                k = int(mask.sum())
                if k:
                    draws = rng.gamma(1.0, 1.0, size=(10_000, k))
                    samples[:, mask] = draws / draws.sum(axis=1, keepdims=True) * budget
            objectives = np.sum(np.log2(1.0 + samples * c), axis=1)
            assert np.all(objectives <= best + 1e-9)


def _grid_best_zone(c, budget, step=1e-3):
    """Exhaustive simplex search at the given resolution, one zone."""
    k = c.size
    if budget == 0 or k == 0:
        return 0.0
    if k == 1:
        return float(np.log2(1.0 + budget * c[0]))
    fractions = np.arange(0.0, 1.0 + step / 2, step)
    if k == 2:
        rho = np.stack([fractions, 1.0 - fractions], axis=1) * budget
        return float(np.max(np.sum(np.log2(1.0 + rho * c), axis=1)))
    best = -np.inf
    for a in fractions:
        b = np.arange(0.0, 1.0 - a + step / 2, step)
        rho = np.stack([np.full_like(b, a), b, 1.0 - a - b], axis=1) * budget
        best = max(best, float(np.max(np.sum(np.log2(1.0 + rho * c), axis=1))))
    return best


def test_brute_force_grid_cross_check():
    rng = np.random.default_rng(99)
    with criterion("brute force: 1e-3 simplex grid never beats the exact "
                   "solution by more than 1e-4 bits (instances with <= 3 users)"):
        for _ in range(60):
            z = int(rng.integers(2, 4))
            c = 10 ** rng.uniform(0.0, 3.0, z)
            radius = 1000.0
            d = rng.uniform(radius / 20.0, radius, z)
            part = partition_zones(d, radius, float(rng.uniform(0.1, 1.0)), 1.0)
            rho, _ = exact_per_zone(c, part)
            best = waterfill_objective(c, rho)
            grid = sum(
                _grid_best_zone(c[mask], budget)
                for mask, budget in ((part.near_mask, part.near_budget),
                                     (part.far_mask, part.far_budget))
                if mask.any()
            )
            assert grid <= best + 1e-4


def test_paired_improvement_across_antenna_grid(antenna_sweep):
    result, elapsed = antenna_sweep
    with criterion("antenna grid direction: zoned water-filling beats the "
                   "equal split at every point, paired, in < 5 min"):
        for value in ANTENNA_VALUES:
            improvement = (result.trials[(value, "proposed")]["ee"]
                           - result.trials[(value, "equal_split")]["ee"])
            assert improvement.mean() > 0, f"no mean improvement at {value}"
            frac_positive = float(np.mean(improvement > 0))
            assert frac_positive >= 0.95, f"only {frac_positive:.1%} positive at {value}"
        assert elapsed < 300.0, f"sweep took {elapsed:.0f}s"


def test_efficiency_decreases_with_circuit_power(circuit_sweep):
    result = circuit_sweep
    with criterion("circuit power trend: efficiency strictly decreases "
                   "across the grid for every scheme, trial by trial"):
        rows = {(r.value, r.scheme): r for r in result.rows}
        for scheme in SCHEMES:
            for a, b in zip(CIRCUIT_VALUES, CIRCUIT_VALUES[1:]):
                assert np.all(result.trials[(a, scheme)]["ee"]
                              > result.trials[(b, scheme)]["ee"])
                assert rows[(a, scheme)].ee_mean > rows[(b, scheme)].ee_mean


def test_power_at_target_rate_nonincreasing_in_antennas(antenna_sweep):
    result, _ = antenna_sweep
    with criterion("antenna power trend: power needed for the target rate "
                   "is nonincreasing, within one standard error"):
        rows = {(r.value, r.scheme): r for r in result.rows}
        for scheme in SCHEMES:
            for a, b in zip(ANTENNA_VALUES, ANTENNA_VALUES[1:]):
                first, second = rows[(a, scheme)], rows[(b, scheme)]
                slack = np.hypot(first.ptx_mw_stderr, second.ptx_mw_stderr)
                assert second.ptx_mw_mean <= first.ptx_mw_mean + slack


def test_sweep_reports_are_byte_identical(tmp_path):
    with criterion("determinism: identical sweep specs give byte-identical "
                   "CSV reports, serial or parallel"):
        config = SystemConfig(num_bs_antennas=8, users_per_cluster=2,
                              user_antennas=2, num_clusters=4, rng_seed=0)
        specs = [
            SweepSpec(variable="antennas", values=(8, 16), trials=10,
                      schemes=SCHEMES, base_config=config, seed=5),
            SweepSpec(variable="p_circuit_dbm", values=(2, 6, 10), trials=10,
                      schemes=SCHEMES, base_config=config, seed=5),
        ]
        for i, spec in enumerate(specs):
            first = emit_csv(run_sweep(spec, workers=1), tmp_path / f"{i}_a.csv")
            again = emit_csv(run_sweep(spec, workers=1), tmp_path / f"{i}_b.csv")
            parallel = emit_csv(run_sweep(spec, workers=2), tmp_path / f"{i}_c.csv")
            assert first.read_bytes() == again.read_bytes() == parallel.read_bytes()
