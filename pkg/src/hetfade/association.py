"""Association probabilities under strongest-BS cell selection.

Tier and order indices are 1-based throughout (tier ``k`` in ``1..K``,
``n = 1`` is the nearest BS of a tier), matching the labels written by the
simulator and the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fading import FadingModel, NakagamiFading, effective_distribution
from .specfun import (
    DEFAULT_QUADRATURE,
    DomainError,
    QuadratureSettings,
    integrate,
    log_gamma,
    regularized_lower_gamma,
    regularized_upper_gamma,
)

__all__ = [
    "TierConfig",
    "NetworkConfig",
    "GPair",
    "AssociationTable",
    "tier_bias",
    "tier_assoc_prob",
    "g_pair_general",
    "g_pair_nakagami",
    "conditional_assoc_prob",
    "conditional_assoc_total",
    "conditional_assoc_probs",
    "assoc_prob_table",
    "normalization_identity_rhs",
]


# g2 reaches O(10) for small h and strong bias; absolute agreement with the
# closed forms at 1e-8 needs a relative target well below the default.
G_QUADRATURE = QuadratureSettings(rel_tol=1e-11)


def _positive_finite(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value) and value > 0


@dataclass(frozen=True)
class TierConfig:
    density: float
    power: float

    def __post_init__(self):
        if not _positive_finite(self.density):
            raise DomainError(f"tier density must be a finite value > 0, got {self.density!r}")
        if not _positive_finite(self.power):
            raise DomainError(f"tier power must be a finite value > 0, got {self.power!r}")


@dataclass(frozen=True)
class NetworkConfig:
    tiers: tuple[TierConfig, ...]
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))
        if len(self.tiers) < 1:
            raise DomainError("network needs at least one tier")
        if not all(isinstance(t, TierConfig) for t in self.tiers):
            raise TypeError("tiers must be TierConfig instances")
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha) and self.alpha > 2):
            raise DomainError(f"alpha must exceed 2, got {self.alpha!r}")

    @classmethod
    def from_lists(cls, densities: Sequence[float], powers: Sequence[float], alpha: float) -> "NetworkConfig":
        if len(densities) != len(powers):
            raise DomainError("densities and powers must have the same length")
        return cls(tuple(TierConfig(d, p) for d, p in zip(densities, powers)), alpha)

    @property
    def K(self) -> int:
        return len(self.tiers)

    def weights(self) -> np.ndarray:
        """Per-tier ``density * power**(2/alpha)``."""
        s = 2.0 / self.alpha
        return np.array([t.density * t.power**s for t in self.tiers])

    def _check_tier(self, k: int) -> int:
        if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= self.K:
            raise IndexError(f"tier index must be in 1..{self.K}, got {k!r}")
        return int(k) - 1


def tier_bias(config: NetworkConfig, k: int) -> float:
    """Ratio of tier ``k``'s weight to the summed weight of the other tiers.

    Returns ``math.inf`` for a single-tier network (empty denominator).
    """
    i = config._check_tier(k)
    if config.K == 1:
        return math.inf
    w = config.weights()
    others = float(np.sum(np.delete(w, i)))
    return float(w[i] / others)


def tier_assoc_prob(config: NetworkConfig, k: int) -> float:
    """Probability of associating with tier ``k``; sums to 1 over tiers."""
    i = config._check_tier(k)
    w = config.weights()
    return float(w[i] / w.sum())


@dataclass(frozen=True)
class GPair:
    g1: float
    g2: float
    h: float
    tier: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.g1 <= 1.0:
            raise DomainError(f"g1 must lie in [0, 1], got {self.g1!r}")
        if not self.g2 >= 0.0:
            raise DomainError(f"g2 must be >= 0, got {self.g2!r}")
        if not 1.0 + self.g2 - self.g1 > 0.0:
            raise DomainError("1 + g2 - g1 must be positive")

    @property
    def ratio(self) -> float:
        """Geometric decay factor ``g1 / (g2 + 1)`` between successive orders."""
        return self.g1 / (self.g2 + 1.0)


def _inverse_bias(bias: float) -> float:
    if bias is None or math.isinf(bias):
        return 0.0
    if not bias > 0:
        raise DomainError(f"tier bias must be > 0, got {bias!r}")
    return 1.0 / bias


def _check_h(h):
    if not (isinstance(h, (int, float)) and h > 0 and math.isfinite(h)):
        raise DomainError(f"conditioning gain h must be a finite value > 0, got {h!r}")


def g_pair_general(
    model: FadingModel,
    alpha: float,
    h: float,
    bias: float = math.inf,
    settings: QuadratureSettings = G_QUADRATURE,
    tier: int | None = None,
) -> GPair:
    """Evaluate g1 and g2 from their integral definitions.

    Both integrals carry the weight ``(2/alpha) y**(2/alpha - 1)``; the
    substitution ``y = u**(alpha/2)`` turns it into ``du`` so the integrands
    below are bounded.
    """
    if not alpha > 2:
        raise DomainError(f"alpha must exceed 2, got {alpha!r}")
    _check_h(h)
    inv_bias = _inverse_bias(bias)
    half_alpha = alpha / 2.0

    def cdf_part(u):
        return model.cdf(u**half_alpha * h)

    def ccdf_part(u):
        return model.ccdf(u**half_alpha * h)

    g1 = integrate(cdf_part, 0.0, 1.0, settings, vectorized=True)
    g2 = integrate(ccdf_part, 1.0, math.inf, settings, vectorized=True)
    if inv_bias:
        g2 += inv_bias * integrate(ccdf_part, 0.0, math.inf, settings, vectorized=True)
    return GPair(min(max(g1, 0.0), 1.0), max(g2, 0.0), float(h), tier)


def _g_nakagami_arrays(m, omega, alpha, h, inv_bias):
    h = np.asarray(h, dtype=float)
    s = 2.0 / alpha
    x = m * h / omega
    gamma_ratio = math.exp(log_gamma(m + s) - log_gamma(m))
    scale = x ** (-s) * gamma_ratio
    g1 = regularized_lower_gamma(m, x) - scale * regularized_lower_gamma(m + s, x)
    g2 = scale * (regularized_upper_gamma(m + s, x) + inv_bias) - regularized_upper_gamma(m, x)
    return np.clip(g1, 0.0, 1.0), np.maximum(g2, 0.0)


def g_pair_nakagami(m: float, omega: float, alpha: float, h: float, bias: float = math.inf,
                    tier: int | None = None) -> GPair:
    """Closed-form g1 and g2 for Nakagami-m fading in terms of incomplete gammas."""
    NakagamiFading(m, omega)
    if not alpha > 2:
        raise DomainError(f"alpha must exceed 2, got {alpha!r}")
    _check_h(h)
    g1, g2 = _g_nakagami_arrays(m, omega, alpha, h, _inverse_bias(bias))
    return GPair(float(g1), float(g2), float(h), tier)


def conditional_assoc_prob(g: GPair, n: int) -> float:
    """Probability that the n-th nearest BS of the tier serves, given its gain."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"order index n must be an integer >= 1, got {n!r}")
    return (1.0 / (g.g2 + 1.0)) ** n * g.g1 ** (n - 1)


def conditional_assoc_probs(g: GPair, n_max: int) -> np.ndarray:
    """``conditional_assoc_prob(g, n)`` for ``n = 1..n_max``."""
    n = np.arange(n_max)
    return g.ratio**n / (g.g2 + 1.0)


def conditional_assoc_total(g: GPair) -> float:
    """Sum over all orders n of the conditional probabilities (geometric series)."""
    return 1.0 / (1.0 + g.g2 - g.g1)


@dataclass(frozen=True)
class AssociationTable:
    """Unconditional ``P[k, n]`` for tiers ``k = 1..K`` and orders ``n = 1..n_max``.

    ``entries[k - 1, n - 1]`` holds ``P_(k,n)``.  ``row_tails`` is the mass
    beyond ``n_max`` per tier, integrated from the closed-form geometric
    tail rather than taken as a complement.
    """

    entries: np.ndarray
    row_tails: np.ndarray

    @property
    def n_max(self) -> int:
        return self.entries.shape[1]

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    @property
    def total(self) -> float:
        return float(self.entries.sum())

    @property
    def truncation_mass(self) -> float:
        return float(self.row_tails.sum())

    def entry(self, k: int, n: int) -> float:
        return float(self.entries[k - 1, n - 1])


def assoc_prob_table(
    config: NetworkConfig,
    model: FadingModel,
    n_max: int = 200,
    method: str = "auto",
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> AssociationTable:
    """Marginalize the conditional association law over the serving link's gain.

    ``method`` picks how g1/g2 are evaluated at each quadrature node:
    ``"closed"`` (Nakagami only), ``"quadrature"`` (any model, nested
    integrals, slow) or ``"auto"``.  The outer integral over the gain runs in
    ``h = u**(alpha/2)``, which keeps the integrand bounded even for
    densities singular at the origin.
    """
    if isinstance(n_max, bool) or not isinstance(n_max, (int, np.integer)) or n_max < 1:
        raise DomainError(f"n_max must be an integer >= 1, got {n_max!r}")
    if method == "auto":
        method = "closed" if isinstance(model, NakagamiFading) else "quadrature"
    if method == "closed" and not isinstance(model, NakagamiFading):
        raise ValueError("closed-form association requires a NakagamiFading model")
    if method not in ("closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")

    alpha = config.alpha
    half_alpha = alpha / 2.0
    orders = np.arange(n_max)
    entries = np.empty((config.K, n_max))
    tails = np.empty(config.K)

    for k in range(1, config.K + 1):
        inv_bias = _inverse_bias(tier_bias(config, k))

        def g_arrays(h, inv_bias=inv_bias):
            if method == "closed":
                return _g_nakagami_arrays(model.m, model.omega, alpha, h, inv_bias)
            bias = math.inf if inv_bias == 0 else 1.0 / inv_bias
            pairs = [g_pair_general(model, alpha, float(hi), bias) for hi in h]
            return np.array([p.g1 for p in pairs]), np.array([p.g2 for p in pairs])

        def integrand(u, g_arrays=g_arrays):
            h = u**half_alpha
            weight = np.asarray(model.pdf(h), dtype=float) * half_alpha * u ** (half_alpha - 1.0)
            g1, g2 = g_arrays(h)
            ratio = g1 / (g2 + 1.0)
            probs = ratio[:, None] ** orders[None, :] / (g2 + 1.0)[:, None]
            tail = ratio**n_max / (1.0 + g2 - g1)
            out = np.empty((h.size, n_max + 1))
            out[:, :n_max] = probs * weight[:, None]
            out[:, n_max] = tail * weight
            return out

        row = integrate(integrand, 0.0, math.inf, settings, vectorized=True)
        entries[k - 1] = np.clip(row[:n_max], 0.0, 1.0)
        tails[k - 1] = max(row[n_max], 0.0)
    return AssociationTable(entries, tails)


def normalization_identity_rhs(config: NetworkConfig, model: FadingModel, k: int, h: float) -> float:
    """``(1/B~_k) (2/alpha) h**(-2/alpha) D``, the closed expression for ``1 + g2 - g1``."""
    dist = effective_distribution(model, config.alpha)
    s = 2.0 / config.alpha
    return s * h ** (-s) * dist.normalizer / tier_assoc_prob(config, k)
