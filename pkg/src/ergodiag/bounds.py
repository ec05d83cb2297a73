"""Moment-based concentration bounds, clamped to valid probabilities.

Upper bounds: Markov (``P(Z >= eps) <= E[Z]/eps`` for ``Z >= 0``) and
Chebyshev (``P(|Z - E[Z]| >= eps) <= Var(Z)/eps^2``).  Lower bound:
Paley-Zygmund (``P(Z >= eps) >= (E[Z] - eps)^2 / (Var(Z) + E[Z]^2)`` for
``Z >= 0`` and ``eps <= E[Z]``), in both the epsilon form and the
``theta * E[Z]`` form.

Markov and Chebyshev are clamped to 1: the raw ratios can exceed 1, where
the bound is vacuous anyway, and clamping keeps probability semantics.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "markov_bound",
    "chebyshev_bound",
    "paley_zygmund_lower",
    "paley_zygmund_theta",
    "BoundReport",
    "bound_report",
]


def markov_bound(mean: float, eps: float) -> float:
    """Upper bound on ``P(Z >= eps)`` for a non-negative variable Z."""
    if mean < 0:
        raise ValueError(f"mean must be >= 0 (Z is non-negative), got {mean}")
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    return min(1.0, mean / eps)


def chebyshev_bound(variance: float, eps: float) -> float:
    """Upper bound on ``P(|Z - E[Z]| >= eps)``.

    Equals ``markov_bound(variance, eps**2)``: the deviation event is the
    event that the non-negative variable ``(Z - E[Z])^2`` reaches ``eps^2``.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    return min(1.0, variance / eps**2)


def paley_zygmund_lower(mean: float, variance: float, eps: float) -> float:
    """Lower bound on ``P(Z >= eps)`` for a non-negative variable Z.

    Valid only on ``0 <= eps <= mean``; larger eps is rejected because the
    derivation requires it.  The all-zero degenerate case (mean, variance,
    eps all 0) returns 0, a correct if useless lower bound.
    """
    if mean < 0 or variance < 0:
        raise ValueError(
            f"mean and variance must be >= 0, got mean={mean}, variance={variance}"
        )
    if eps < 0 or eps > mean:
        raise ValueError(f"eps must be in [0, mean={mean}], got {eps}")
    denom = variance + mean**2
    if denom == 0.0:
        return 0.0
    return (mean - eps) ** 2 / denom


def paley_zygmund_theta(mean: float, variance: float, theta: float) -> float:
    """Lower bound on ``P(Z >= theta * E[Z])`` for ``theta`` in (0, 1).

    Algebraically the same bound as :func:`paley_zygmund_lower` at
    ``eps = theta * mean``.
    """
    if not 0 < theta < 1:
        raise ValueError(f"theta must be in (0, 1), got {theta}")
    if mean < 0 or variance < 0:
        raise ValueError(
            f"mean and variance must be >= 0, got mean={mean}, variance={variance}"
        )
    denom = variance + mean**2
    if denom == 0.0:
        return 0.0
    return (1.0 - theta) ** 2 * mean**2 / denom


@dataclass(frozen=True)
class BoundReport:
    """All applicable bounds at one threshold, plus the moments used.

    ``markov`` and ``pz_lower`` are ``None`` where their hypotheses fail
    (negative mean, or eps above the mean).
    """

    markov: float | None
    chebyshev: float
    pz_lower: float | None
    eps: float
    moments_used: tuple[float, float, float]


def bound_report(mean: float, variance: float, eps: float) -> BoundReport:
    """Evaluate every bound whose hypothesis holds for the given moments."""
    markov = markov_bound(mean, eps) if mean >= 0 else None
    pz = (
        paley_zygmund_lower(mean, variance, eps)
        if mean >= 0 and 0 <= eps <= mean
        else None
    )
    return BoundReport(
        markov=markov,
        chebyshev=chebyshev_bound(variance, eps),
        pz_lower=pz,
        eps=eps,
        moments_used=(mean, variance, variance + mean**2),
    )
