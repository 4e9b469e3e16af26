import numpy as np
import pytest

from cellwf.model import ChannelRealization, SystemConfig


@pytest.fixture
def small_config() -> SystemConfig:
    """Cheap scenario for structural tests: 8 antennas, 4 clusters of 2."""
    return SystemConfig(
        num_bs_antennas=8,
        users_per_cluster=2,
        user_antennas=2,
        num_clusters=4,
        rng_seed=1234,
    )


def make_fake_realization(snr_ratios, distances=None) -> ChannelRealization:
    """Realization stub with prescribed per-user SNR ratios.

    Rate evaluation only touches `snr_ratios` and array shapes, so the
    matrix fields can be placeholders.
    """
    c = np.asarray(snr_ratios, dtype=float)
    n_clusters, z = c.shape
    if distances is None:
        distances = np.full_like(c, 100.0)
    return ChannelRealization(
        channels=np.zeros((n_clusters, z, 1, 1), dtype=complex),
        precoder=np.zeros((1, n_clusters), dtype=complex),
        detectors=np.zeros((n_clusters, z, 1), dtype=complex),
        distances=np.asarray(distances, dtype=float),
        effective_gains=c.copy(),
        snr_ratios=c,
        rep_index=np.zeros(n_clusters, dtype=int),
    )
