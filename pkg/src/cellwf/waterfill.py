"""Zoned water-filling power allocation.

A cluster's users are split into a near and a far zone at half the cell
radius. The flexible power budget is divided between the zones by the
coefficient

    alpha = sum_{near} d^2 / sum_{all} d^2,

so farther users collectively receive more power. Inside each zone the
budget is spread by water-filling: rho_z = (1/lambda - 1/c_z)^+ with a
per-zone multiplier lambda chosen so the zone budget is met. Two solvers
are provided: a direct active-set solution (`waterfill_exact`, used as the
reference) and a projected dual-update iteration (`solve_iterative`) that
alternates closed-form allocations with multiplier corrections
proportional to the zone budget violation. Equal-split and single-zone
allocators serve as baselines.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import ChannelRealization, SystemConfig

__all__ = [
    "ZonePartition",
    "PowerAllocation",
    "DualState",
    "partition_zones",
    "waterfill_closed_form",
    "waterfill_exact",
    "waterfill_objective",
    "initial_duals",
    "solve_iterative",
    "allocate_baseline_equal",
    "allocate_baseline_single_zone",
    "SCHEME_PROPOSED",
    "SCHEME_EQUAL_SPLIT",
    "SCHEME_SINGLE_ZONE",
    "ALL_SCHEMES",
    "allocate_scheme",
    "ClusterSolution",
]

SCHEME_PROPOSED = "proposed"
SCHEME_EQUAL_SPLIT = "equal_split"
SCHEME_SINGLE_ZONE = "single_zone"
ALL_SCHEMES = (SCHEME_PROPOSED, SCHEME_EQUAL_SPLIT, SCHEME_SINGLE_ZONE)

# Multipliers are kept strictly positive; 1/x stays finite here.
_LAMBDA_FLOOR = 1e-100


@dataclass(frozen=True)
class ZonePartition:
    """Zone membership and per-zone coefficient budgets for one cluster."""

    near_mask: np.ndarray   # bool per user, True = near zone (d <= D/2)
    alpha: float            # near zone's share of the flexible power
    near_budget: float      # coefficient budget alpha * p_transmit / p_max
    far_budget: float       # coefficient budget (1 - alpha) * p_transmit / p_max
    p_transmit: float       # watts
    p_max: float            # watts

    @property
    def far_mask(self) -> np.ndarray:
        return ~self.near_mask


@dataclass(frozen=True)
class PowerAllocation:
    """Nonnegative power coefficients, at most 1 in total."""

    rho: np.ndarray

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=float)
        if np.any(rho < 0):
            raise ValueError("power coefficients must be nonnegative")
        if rho.sum() > 1.0 + 1e-9:
            raise ValueError("power coefficients must sum to at most 1")
        object.__setattr__(self, "rho", rho)

    @property
    def total_coefficient(self) -> float:
        return float(self.rho.sum())


@dataclass
class DualState:
    """Multipliers and loop controls for the iterative solver.

    ``theta1``/``theta2`` of ``None`` select the default step heuristic: a
    slope-matched step ``lambda^2 / (p_max * k_active)`` recomputed every
    iteration, which follows the budget curve like a Newton update and
    approaches the fixed point monotonically from the initial multipliers
    of `initial_duals`. Explicit values are used as constant steps,
    optionally decayed by 1/n. Note the loop stops on allocation
    stationarity, so an oversized explicit step that clamps a whole zone
    to zero for two consecutive iterations exits there; the default
    heuristic cannot reach that state.
    """

    lambda1: float
    lambda2: float
    theta1: float | None = None
    theta2: float | None = None
    step_decay: bool = False
    tolerance: float = 1e-8
    max_iterations: int = 100_000
    iterations_used: int = 0
    converged: bool = False

    def __post_init__(self) -> None:
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ValueError("initial multipliers must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        for theta in (self.theta1, self.theta2):
            if theta is not None and theta < 0:
                raise ValueError("step sizes must be nonnegative")


def partition_zones(distances, cell_radius: float, p_transmit: float,
                    p_max: float) -> ZonePartition:
    """Split users at half the cell radius and derive the zone budgets.

    The boundary distance d = cell_radius/2 counts as near. Budgets are
    expressed as coefficients (fractions of ``p_max``) and sum to
    ``p_transmit / p_max``.
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("at least one user distance is required")
    if cell_radius <= 0:
        raise ValueError("cell_radius must be positive")
    if np.any(d <= 0) or np.any(d > cell_radius):
        raise ValueError("distances must lie in (0, cell_radius]")
    if p_max <= 0 or not 0 < p_transmit <= p_max:
        raise ValueError("need 0 < p_transmit <= p_max")

    near = d <= cell_radius / 2.0
    alpha = float(np.sum(d[near] ** 2) / np.sum(d**2))
    ratio = p_transmit / p_max
    return ZonePartition(
        near_mask=near,
        alpha=alpha,
        near_budget=alpha * ratio,
        far_budget=(1.0 - alpha) * ratio,
        p_transmit=p_transmit,
        p_max=p_max,
    )


def _check_ratios(snr_ratios) -> np.ndarray:
    c = np.asarray(snr_ratios, dtype=float)
    if c.size == 0:
        raise ValueError("at least one SNR ratio is required")
    if np.any(c <= 0):
        raise ValueError("SNR ratios must be positive")
    return c


def waterfill_closed_form(snr_ratios, lam: float) -> np.ndarray:
    """Per-user coefficients (1/lam - 1/c)^+ at a fixed multiplier."""
    c = _check_ratios(snr_ratios)
    if lam <= 0:
        raise ValueError("multiplier must be positive")
    return np.maximum(0.0, 1.0 / lam - 1.0 / c)


def waterfill_exact(snr_ratios, budget: float) -> tuple[np.ndarray, float]:
    """Water-fill a budget over parallel channels by active-set search.

    Returns the unique allocation with sum(rho) == budget and
    rho = (w - 1/c)^+ at the common water level w, together with w.
    Users are activated in decreasing-gain order until the water level
    would drop below the next user's inverse gain.
    """
    c = _check_ratios(snr_ratios)
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    if budget == 0:
        return np.zeros_like(c), float(1.0 / c.max())

    order = np.argsort(-c, kind="stable")
    inv_sorted = 1.0 / c[order]
    prefix = np.cumsum(inv_sorted)
    k_range = np.arange(1, c.size + 1)
    levels = (budget + prefix) / k_range
    # Largest active set whose water level still covers its weakest user
    # (>= so budgets below float resolution degrade to a zero allocation).
    feasible = levels >= inv_sorted
    k = int(np.nonzero(feasible)[0][-1]) + 1
    w = float(levels[k - 1])

    rho = np.zeros_like(c)
    rho[order[:k]] = w - inv_sorted[:k]
    return rho, w


def waterfill_objective(snr_ratios, rho) -> float:
    """Sum spectral efficiency sum(log2(1 + rho * c)) of an allocation."""
    c = np.asarray(snr_ratios, dtype=float)
    r = np.asarray(rho, dtype=float)
    return float(np.sum(np.log2(1.0 + r * c)))


def initial_duals(snr_ratios, partition: ZonePartition, *,
                  tolerance: float = 1e-8, max_iterations: int = 100_000) -> DualState:
    """Water-level-based starting multipliers for `solve_iterative`.

    Per zone, lambda0 = k / (budget + sum(1/c)), the exact multiplier if
    every user in the zone were active. This never overshoots the fixed
    point, so the default step heuristic approaches it monotonically.
    """
    c = _check_ratios(snr_ratios)

    def lam0(mask: np.ndarray, budget: float) -> float:
        if not mask.any():
            return 1.0  # unused; the solver skips empty zones
        return float(mask.sum() / (budget + np.sum(1.0 / c[mask])))

    return DualState(
        lambda1=lam0(partition.near_mask, partition.near_budget),
        lambda2=lam0(partition.far_mask, partition.far_budget),
        tolerance=tolerance,
        max_iterations=max_iterations,
    )


def _step_size(theta: float | None, decay: bool, n: int, lam: float,
               p_max: float, k_active: int) -> float:
    if theta is not None:
        return theta / n if decay else theta
    return lam * lam / (p_max * max(k_active, 1))


def solve_iterative(snr_ratios, partition: ZonePartition,
                    dual0: DualState | None = None) -> tuple[np.ndarray, DualState]:
    """Projected dual-update iteration for the zoned water-filling problem.

    Repeats until the allocation is stationary (max |rho - rho_prev| <
    tolerance) or the iteration cap is hit:

        rho_z   = (1/lambda1 - 1/c_z)^+          near-zone users
        rho_z   = (1/lambda2 - 1/c_z)^+          far-zone users
        lambda1 = max(0, lambda1 - theta1 * (B_near - p_max * sum_near rho))
        lambda2 = max(0, lambda2 - theta2 * (B_far - p_max * sum_far rho))

    with watt budgets B_near = alpha * p_transmit and B_far =
    (1 - alpha) * p_transmit. Non-convergence is reported through the
    returned state's ``converged`` flag, never raised. Empty zones are
    skipped.
    """
    c = _check_ratios(snr_ratios)
    if partition.near_mask.shape != c.shape:
        raise ValueError("partition does not match the gain vector")
    dual = replace(dual0) if dual0 is not None else initial_duals(c, partition)

    near = partition.near_mask
    far = partition.far_mask
    p_max = partition.p_max
    budget_w = (partition.near_budget * p_max, partition.far_budget * p_max)
    masks = (near, far)

    lam = [dual.lambda1, dual.lambda2]
    thetas = (dual.theta1, dual.theta2)
    rho = np.zeros_like(c)
    converged = False
    n = 0

    for n in range(1, dual.max_iterations + 1):
        rho_new = np.zeros_like(c)
        for side in (0, 1):
            if masks[side].any():
                rho_new[masks[side]] = np.maximum(0.0, 1.0 / lam[side] - 1.0 / c[masks[side]])

        delta = float(np.max(np.abs(rho_new - rho)))
        rho = rho_new
        if delta < dual.tolerance:
            converged = True
            break

        for side in (0, 1):
            if not masks[side].any():
                continue
            violation = budget_w[side] - p_max * float(rho[masks[side]].sum())
            k_active = int(np.count_nonzero(rho[masks[side]]))
            theta = _step_size(thetas[side], dual.step_decay, n, lam[side], p_max, k_active)
            candidate = lam[side] - theta * violation
            if thetas[side] is None and candidate <= 0:
                candidate = lam[side] / 2.0  # damp instead of crossing zero
            lam[side] = max(candidate, _LAMBDA_FLOOR)

    dual.lambda1, dual.lambda2 = lam
    dual.iterations_used = n
    dual.converged = converged
    return rho, dual


def allocate_baseline_equal(partition: ZonePartition) -> np.ndarray:
    """Split each zone's budget equally among that zone's users."""
    rho = np.zeros(partition.near_mask.shape, dtype=float)
    for mask, budget in ((partition.near_mask, partition.near_budget),
                         (partition.far_mask, partition.far_budget)):
        k = int(mask.sum())
        if k:
            rho[mask] = budget / k
    return rho


def allocate_baseline_single_zone(snr_ratios, budget: float) -> tuple[np.ndarray, float]:
    """Water-fill the whole budget with no zone split (ablation baseline)."""
    return waterfill_exact(snr_ratios, budget)


@dataclass(frozen=True)
class ClusterSolution:
    """Per-cluster outcome of a scheme applied to one realization."""

    partition: ZonePartition
    rho: np.ndarray
    dual: DualState | None  # None for non-iterative schemes


def allocate_scheme(real: ChannelRealization, config: SystemConfig, scheme: str,
                    *, tolerance: float = 1e-8,
                    max_iterations: int = 100_000) -> tuple[PowerAllocation, list[ClusterSolution]]:
    """Apply an allocation scheme cluster by cluster.

    The flexible power ``config.p_transmit`` is divided evenly across
    clusters, so the stacked coefficients always sum to
    ``p_transmit / p_max`` and stay feasible. Schemes:

    - ``proposed``: zone split plus iterative water-filling per zone.
    - ``equal_split``: zone split, equal coefficients inside each zone.
    - ``single_zone``: water-filling over the whole cluster, no zones.
    """
    if scheme not in ALL_SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {ALL_SCHEMES}")

    n_clusters = real.num_clusters
    p_cluster = config.p_transmit / n_clusters
    rho = np.zeros_like(real.snr_ratios)
    solutions: list[ClusterSolution] = []

    for m in range(n_clusters):
        c = real.snr_ratios[m]
        part = partition_zones(real.distances[m], config.cell_radius, p_cluster, config.p_max)
        dual = None
        if scheme == SCHEME_PROPOSED:
            dual0 = initial_duals(c, part, tolerance=tolerance, max_iterations=max_iterations)
            rho_m, dual = solve_iterative(c, part, dual0)
        elif scheme == SCHEME_EQUAL_SPLIT:
            rho_m = allocate_baseline_equal(part)
        else:
            rho_m, _ = allocate_baseline_single_zone(c, p_cluster / config.p_max)
        rho[m] = rho_m
        solutions.append(ClusterSolution(partition=part, rho=rho_m, dual=dual))

    return PowerAllocation(rho=rho), solutions
