"""Empirical, data-side estimators computed from sampled trajectories.

Counterparts of the model-side quantities in :mod:`ergodiag.model`: running
and full time averages of a path, biased sample autocovariances, windowed
estimates of the integrated correlation time, ensemble mean squared error
against a target mean, empirical tail frequencies, and the Euclidean gap for
vector-valued averages.

Path sums are accumulated sequentially in ascending index order, so the last
running average equals the full time average bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import DegenerateSeriesError

__all__ = [
    "PathOrigin",
    "SamplePath",
    "Ensemble",
    "AutocovEstimate",
    "TauEstimate",
    "time_average",
    "running_averages",
    "sample_autocovariance",
    "estimate_tau",
    "ensemble_mse",
    "empirical_tail",
    "vector_norm_gap",
]

# Estimates of tau from strongly anticorrelated data can come out nonpositive;
# they are floored here so downstream ESS arithmetic stays total.
_TAU_FLOOR = 1e-3


@dataclass(frozen=True)
class PathOrigin:
    """Provenance of a sampled path: generating model, seed, replicate."""

    label: str
    base_seed: int
    replicate: int


@dataclass(frozen=True)
class SamplePath:
    """One sampled trajectory of finite values, with optional provenance."""

    values: np.ndarray
    origin: PathOrigin | None = None

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("path values must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("path values must be finite (no NaN or inf)")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class Ensemble:
    """Independent replicate paths of equal length from one model.

    ``values`` has shape ``(replicates, length)``; row ``r`` is the path of
    replicate ``r``, so replicate indices ``0..R-1`` are distinct by
    construction.
    """

    values: np.ndarray
    spec_label: str = ""
    base_seed: int = 0

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("ensemble values must be a nonempty 2-d array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("ensemble values must be finite")
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_paths(
        cls, paths: Iterable[SamplePath], spec_label: str = "", base_seed: int = 0
    ) -> "Ensemble":
        rows = [p.values for p in paths]
        if not rows:
            raise ValueError("ensemble needs at least one path")
        lengths = {r.size for r in rows}
        if len(lengths) != 1:
            raise ValueError(f"paths have unequal lengths: {sorted(lengths)}")
        return cls(np.vstack(rows), spec_label=spec_label, base_seed=base_seed)

    @property
    def n_replicates(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def path(self, replicate: int) -> SamplePath:
        origin = PathOrigin(self.spec_label, self.base_seed, replicate)
        return SamplePath(self.values[replicate], origin=origin)

    def averages(self) -> np.ndarray:
        """Per-replicate time averages, in replicate-index order."""
        return np.cumsum(self.values, axis=1)[:, -1] / self.length


@dataclass(frozen=True)
class AutocovEstimate:
    """Sample autocovariances ``gamma_hat(0..max_lag)`` from one path."""

    gamma_hat: np.ndarray
    n: int
    mean_used: float

    @property
    def max_lag(self) -> int:
        return self.gamma_hat.size - 1


@dataclass(frozen=True)
class TauEstimate:
    """Windowed estimate of the integrated correlation time.

    ``window`` is the number of lags summed.  ``saturated`` is set when no
    self-consistent window fit inside the available lags, ``floored`` when
    the raw estimate fell below the positivity floor.
    """

    value: float
    window: int
    saturated: bool = False
    floored: bool = False


def time_average(path: SamplePath) -> float:
    """Arithmetic mean of the path, summed in ascending index order."""
    v = path.values
    return float(np.cumsum(v)[-1]) / v.size


def running_averages(path: SamplePath) -> np.ndarray:
    """Prefix means ``(A_1, ..., A_n)``; the last equals ``time_average``."""
    v = path.values
    return np.cumsum(v) / np.arange(1, v.size + 1, dtype=float)


def sample_autocovariance(path: SamplePath, max_lag: int) -> AutocovEstimate:
    """Biased sample autocovariances of one path.

    ``gamma_hat(h) = (1/n) * sum_{t=1..n-h} (x_t - xbar)(x_{t+h} - xbar)``
    with ``xbar`` the full-path mean.  The 1/n normalization (rather than
    1/(n-h)) keeps the implied autocovariance matrix positive semi-definite
    and the windowed tau estimate bounded.
    """
    n = len(path)
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    xbar = time_average(path)
    d = path.values - xbar
    gamma = np.empty(max_lag + 1, dtype=float)
    for h in range(max_lag + 1):
        gamma[h] = float(np.sum(d[: n - h] * d[h:])) / n
    return AutocovEstimate(gamma_hat=gamma, n=n, mean_used=xbar)


def estimate_tau(acov: AutocovEstimate, window_c: float = 6.0) -> TauEstimate:
    """Integrated correlation time via a self-consistent window.

    Sums normalized autocovariances out to the smallest window ``W`` with
    ``W >= window_c * tau_hat(W)``, where
    ``tau_hat(W) = 1 + 2 * sum_{h=1..W} gamma_hat(h) / gamma_hat(0)``.
    Falls back to the full available lag range (flagged ``saturated``) when
    no window qualifies.  ``window_c`` trades bias (small) against noise
    (large); 6 is conventional.
    """
    if window_c <= 0:
        raise ValueError(f"window_c must be > 0, got {window_c}")
    g = acov.gamma_hat
    if g[0] <= 0:
        raise DegenerateSeriesError(
            f"sample variance must be > 0 to normalize, got gamma_hat(0)={g[0]}"
        )
    m = acov.max_lag
    if m == 0:
        return TauEstimate(1.0, window=0, saturated=True)

    taus = 1.0 + 2.0 * np.cumsum(g[1:] / g[0])
    window = m
    saturated = True
    for w in range(1, m + 1):
        if w >= window_c * taus[w - 1]:
            window = w
            saturated = False
            break
    raw = float(taus[window - 1])
    floored = raw < _TAU_FLOOR
    return TauEstimate(
        value=max(raw, _TAU_FLOOR), window=window, saturated=saturated, floored=floored
    )


def ensemble_mse(ensemble: Ensemble, m_n: float) -> float:
    """Mean squared error of per-replicate time averages around ``m_n``.

    Reduction runs in replicate-index order, independent of how replicates
    were produced.
    """
    a = ensemble.averages()
    return float(np.mean((a - m_n) ** 2))


def empirical_tail(ensemble: Ensemble, m_n: float, eps: float) -> float:
    """Fraction of replicates whose time average misses ``m_n`` by >= eps."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    a = ensemble.averages()
    return int(np.count_nonzero(np.abs(a - m_n) >= eps)) / ensemble.n_replicates


def vector_norm_gap(
    coordinate_averages: Sequence[float], coordinate_means: Sequence[float]
) -> float:
    """Euclidean distance between a vector of averages and its target means."""
    a = np.asarray(coordinate_averages, dtype=float)
    m = np.asarray(coordinate_means, dtype=float)
    if a.shape != m.shape or a.ndim != 1 or a.size < 1:
        raise ValueError(
            f"coordinate vectors must be equal-length and nonempty, "
            f"got shapes {a.shape} and {m.shape}"
        )
    d = a - m
    return float(np.sqrt(np.sum(d * d)))
