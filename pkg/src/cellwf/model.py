"""Downlink channel model for a cluster-structured multi-antenna system.

One base station with ``M`` antennas serves ``C`` clusters of ``Z`` users
each over a shared band. Per realization we draw i.i.d. Rayleigh channels,
place users uniformly on an annulus around the base station, build
per-user detection vectors and a zero-forcing precoder across cluster
representatives, and reduce every user to a scalar effective gain

    g = |v^H H p|^2 * d^(-beta)

from which rates and energy efficiency are evaluated under superposition
coding with successive interference cancellation inside each cluster.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemConfig",
    "ChannelRealization",
    "RateReport",
    "dbm_to_watt",
    "watt_to_dbm",
    "generate_realization",
    "compute_rates",
    "representative_leakage",
]

# Stacked representative channels are treated as singular below this
# ratio of smallest to largest singular value.
_RANK_TOL = 1e-12
# Fresh draws attempted before giving up on a usable channel.
_MAX_REGEN = 8


def dbm_to_watt(dbm: float) -> float:
    """Convert a power in dBm to watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    """Convert a power in watts to dBm."""
    if watt <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * np.log10(watt) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters for one downlink cell.

    Powers are stored in watts; ``noise_psd`` is a spectral density in
    dBm/Hz. ``num_clusters`` is the number of simultaneously served
    clusters; it may be smaller than the antenna count, in which case the
    surplus antennas contribute array gain through the zero-forcing
    construction.
    """

    num_bs_antennas: int = 128
    users_per_cluster: int = 3
    user_antennas: int = 2
    num_clusters: int = 4
    p_max: float = dbm_to_watt(10.0)
    p_transmit: float = dbm_to_watt(7.0)
    p_circuit: float = dbm_to_watt(6.0)
    noise_psd: float = -175.0
    bandwidth: float = 120e3
    cell_radius: float = 2000.0
    min_distance: float | None = None
    path_loss_exponent: float = 3.8
    rng_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("num_bs_antennas", "users_per_cluster", "user_antennas", "num_clusters"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        for name in ("p_max", "p_transmit", "p_circuit", "bandwidth", "cell_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.p_transmit > self.p_max:
            raise ValueError("p_transmit must not exceed p_max")
        if self.min_distance is None:
            object.__setattr__(self, "min_distance", self.cell_radius / 20.0)
        if not 0 < self.min_distance < self.cell_radius:
            raise ValueError("min_distance must lie in (0, cell_radius)")
        if self.path_loss_exponent < 0:
            raise ValueError("path_loss_exponent must be nonnegative")
        if self.noise_power() <= 0:
            raise ValueError("noise power must be strictly positive")

    def noise_power(self) -> float:
        """Noise power sigma^2 = psd (W/Hz) * bandwidth, in watts."""
        return dbm_to_watt(self.noise_psd) * self.bandwidth

    def snr_scale(self) -> float:
        """Transmit SNR zeta = p_max / sigma^2 multiplying all gains."""
        return self.p_max / self.noise_power()


@dataclass(frozen=True)
class ChannelRealization:
    """One channel draw, reduced to per-user scalar quantities.

    Users inside each cluster are indexed by decreasing effective gain, so
    ``effective_gains[m]`` is nonincreasing. ``rep_index[m]`` is the user
    whose post-detection row channel was used as the cluster's
    zero-forcing constraint; for that user the inter-cluster leakage is
    zero up to floating point.
    """

    channels: np.ndarray        # complex, (C, Z, N, M)
    precoder: np.ndarray        # complex, (M, C); column m serves cluster m
    detectors: np.ndarray       # complex, (C, Z, N), unit norm rows
    distances: np.ndarray       # float, (C, Z), meters
    effective_gains: np.ndarray  # float, (C, Z), includes d^-beta
    snr_ratios: np.ndarray      # float, (C, Z), zeta * effective gain
    rep_index: np.ndarray       # int, (C,)

    @property
    def num_clusters(self) -> int:
        return self.channels.shape[0]

    @property
    def users_per_cluster(self) -> int:
        return self.channels.shape[1]


@dataclass(frozen=True)
class RateReport:
    """Achieved rates and energy efficiency for one allocation."""

    per_user_rates: np.ndarray   # bit/s/Hz, (C, Z)
    sum_rate: float              # bit/s/Hz
    energy_efficiency: float     # bit/joule
    total_transmit_power: float  # watts


def _draw_distances(rng: np.random.Generator, shape: tuple[int, ...],
                    r_min: float, r_max: float) -> np.ndarray:
    # Uniform over the annulus area, not over the radius.
    u = rng.random(shape)
    return np.sqrt(r_min**2 + u * (r_max**2 - r_min**2))


def _draw_channels(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def _dominant_left_singular(h: np.ndarray) -> np.ndarray:
    """Unit-norm combiner maximizing post-combining channel power."""
    u, _, _ = np.linalg.svd(h, full_matrices=False)
    v = u[:, 0]
    # Fix the arbitrary phase so equal inputs give bit-equal outputs.
    k = int(np.argmax(np.abs(v)))
    v = v * (np.conj(v[k]) / np.abs(v[k]))
    return v


def generate_realization(config: SystemConfig, seed: int | None = None) -> ChannelRealization:
    """Draw one channel realization for the configured cell.

    Channel entries are i.i.d. circularly-symmetric complex Gaussian with
    unit variance; user distances are uniform over the annulus
    ``[min_distance, cell_radius]``. Each user's detector is the dominant
    left singular vector of its channel; the precoder zero-forces across
    the per-cluster representative rows (the strongest user of each
    cluster) and has unit-norm columns. Within each cluster users are
    re-indexed so effective gains are nonincreasing.

    Raises:
        RuntimeError: if the stacked representative channels stay singular
            after 8 fresh draws (e.g. more clusters than antennas).
    """
    m_ant = config.num_bs_antennas
    n_clusters = config.num_clusters
    z = config.users_per_cluster
    n_rx = config.user_antennas
    rng = np.random.default_rng(config.rng_seed if seed is None else seed)

    for _ in range(_MAX_REGEN):
        distances = _draw_distances(rng, (n_clusters, z), config.min_distance, config.cell_radius)
        channels = _draw_channels(rng, (n_clusters, z, n_rx, m_ant))

        detectors = np.empty((n_clusters, z, n_rx), dtype=complex)
        eff_rows = np.empty((n_clusters, z, m_ant), dtype=complex)
        for m in range(n_clusters):
            for u in range(z):
                v = _dominant_left_singular(channels[m, u])
                detectors[m, u] = v
                eff_rows[m, u] = np.conj(v) @ channels[m, u]

        attenuation = distances ** (-config.path_loss_exponent)
        # Representative = strongest user by post-detection channel power
        # including the large-scale term.
        row_power = np.sum(np.abs(eff_rows) ** 2, axis=2) * attenuation
        rep = np.argmax(row_power, axis=1)

        stacked = eff_rows[np.arange(n_clusters), rep]  # (C, M)
        # Zero-forcing needs full row rank: C singular values, none tiny.
        sv = np.linalg.svd(stacked, compute_uv=False)
        if sv.size < n_clusters or sv[-1] <= _RANK_TOL * sv[0]:
            continue

        precoder = np.linalg.pinv(stacked)  # (M, C)
        precoder = precoder / np.linalg.norm(precoder, axis=0, keepdims=True)

        own = np.einsum("czm,mc->cz", eff_rows, precoder)
        effective_gains = np.abs(own) ** 2 * attenuation
        snr_ratios = config.snr_scale() * effective_gains

        # Re-index users inside each cluster by decreasing effective gain.
        order = np.argsort(-effective_gains, axis=1, kind="stable")
        rows = np.arange(n_clusters)[:, None]
        rep_sorted = np.empty(n_clusters, dtype=int)
        for m in range(n_clusters):
            rep_sorted[m] = int(np.nonzero(order[m] == rep[m])[0][0])

        return ChannelRealization(
            channels=channels[rows, order],
            precoder=precoder,
            detectors=detectors[rows, order],
            distances=distances[rows, order],
            effective_gains=effective_gains[rows, order],
            snr_ratios=snr_ratios[rows, order],
            rep_index=rep_sorted,
        )

    raise RuntimeError(
        "degenerate channel: stacked representative channels are singular "
        f"({n_clusters} clusters, {m_ant} antennas)"
    )


def _rho_array(alloc, shape: tuple[int, ...]) -> np.ndarray:
    rho = np.asarray(getattr(alloc, "rho", alloc), dtype=float)
    if rho.shape != shape:
        raise ValueError(f"allocation shape {rho.shape} does not match realization {shape}")
    if np.any(rho < 0):
        raise ValueError("power coefficients must be nonnegative")
    if rho.sum() > 1.0 + 1e-9:
        raise ValueError("power coefficients must sum to at most 1")
    return rho


def compute_rates(real: ChannelRealization, alloc, config: SystemConfig) -> RateReport:
    """Evaluate per-user rates and energy efficiency for an allocation.

    User ``z`` of a cluster decodes and cancels all weaker users and sees
    the stronger-indexed users as residual interference:

        R_z = log2(1 + c_z * rho_z / (1 + c_z * sum_{j<z} rho_j))

    with ``c`` the per-user SNR ratio. Energy efficiency is
    ``bandwidth * sum_rate / (p_circuit + p_max * sum(rho))`` in bit/J.
    """
    rho = _rho_array(alloc, real.snr_ratios.shape)
    c = real.snr_ratios

    prior = np.cumsum(rho, axis=1) - rho  # sum over stronger-indexed users
    sinr = c * rho / (1.0 + c * prior)
    rates = np.log2(1.0 + sinr)

    sum_rate = float(rates.sum())
    ptx = config.p_max * float(rho.sum())
    ee = config.bandwidth * sum_rate / (config.p_circuit + ptx)
    return RateReport(
        per_user_rates=rates,
        sum_rate=sum_rate,
        energy_efficiency=ee,
        total_transmit_power=ptx,
    )


def representative_leakage(real: ChannelRealization) -> np.ndarray:
    """Inter-cluster leakage magnitudes at the representative users.

    Entry ``[m, i]`` is ``|v^H H p_i|`` for cluster m's representative and
    serving column ``i``; off-diagonal entries are zero up to floating
    point by the zero-forcing construction. Normalized by the row channel
    norm so the scale is comparable across draws.
    """
    n_clusters = real.num_clusters
    out = np.empty((n_clusters, n_clusters))
    for m in range(n_clusters):
        u = real.rep_index[m]
        row = np.conj(real.detectors[m, u]) @ real.channels[m, u]
        out[m] = np.abs(row @ real.precoder) / np.linalg.norm(row)
    return out
