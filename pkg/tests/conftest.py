import numpy as np
import pytest

from ergodiag import Family, ProcessConfig, ProcessSpec, StationaryCov


@pytest.fixture
def ar1_config() -> ProcessConfig:
    return ProcessConfig(Family.AR1, {"phi": 0.5, "gamma0": 1.0})


@pytest.fixture
def spike_config() -> ProcessConfig:
    return ProcessConfig(Family.SPARSE_SPIKES)


@pytest.fixture
def shock_config() -> ProcessConfig:
    return ProcessConfig(Family.COMMON_SHOCK, {"sigma_z": 1.0, "sigma_eps": 1.0})


@pytest.fixture
def drift_config() -> ProcessConfig:
    return ProcessConfig(
        Family.DRIFTING_MEAN,
        {"trend": {"kind": "LINEAR", "a": 1.0, "b": 0.5}, "noise_sd": 1.0},
    )


def white_noise_spec(variance: float = 1.0) -> ProcessSpec:
    """Uncorrelated unit-mean-zero spec used across model tests."""
    return ProcessSpec(
        mean_fn=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        cov_fn=lambda t, s: np.where(np.equal(t, s), variance, 0.0),
        stationary=StationaryCov(
            gamma=lambda h: np.where(np.equal(h, 0), variance, 0.0),
            max_meaningful_lag=0,
        ),
        label="white",
    )
