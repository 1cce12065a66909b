"""Original and effective fading-gain distributions.

:class:`FadingModel` is the contract every per-link gain distribution
satisfies; :class:`NakagamiFading` (Gamma power gain, shape ``m``, mean
``omega``) is the concrete instance.  A strongest-BS selection tilts the
original density by ``y**(2/alpha)``; :class:`EffectiveFadingDistribution`
evaluates that tilted law for any model by quadrature, and the
``*_nakagami`` functions give its Gamma closed form.
"""

from __future__ import annotations

import functools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

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
    "FadingModel",
    "NakagamiFading",
    "EffectiveFadingDistribution",
    "effective_distribution",
    "nakagami_pdf",
    "nakagami_cdf",
    "sample_fading",
    "effective_pdf_general",
    "effective_pdf_nakagami",
    "effective_cdf",
    "effective_cdf_nakagami",
    "effective_nakagami_model",
]


def _check_alpha(alpha):
    if not alpha > 2:
        raise DomainError(f"path-loss exponent alpha must exceed 2, got {alpha!r}")


def _as_support(y):
    arr = np.asarray(y, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"fading gain must be >= 0, got {y!r}")
    return arr


def _out(arr, scalar):
    return float(arr) if scalar else arr


class FadingModel(ABC):
    """Distribution of a nonnegative i.i.d. per-link fading gain.

    Subclasses provide ``pdf``, ``cdf`` and ``sample``; all evaluation
    methods accept scalars or arrays.  ``ccdf`` should be overridden when a
    direct tail evaluation is more accurate than ``1 - cdf``.
    """

    @abstractmethod
    def pdf(self, y): ...

    @abstractmethod
    def cdf(self, y): ...

    @abstractmethod
    def sample(self, rng: np.random.Generator, size=None): ...

    def ccdf(self, y):
        out = 1.0 - np.asarray(self.cdf(y), dtype=float)
        return _out(out, np.ndim(y) == 0)

    def tilted_pdf(self, y, power: float):
        """``y**power * pdf(y)`` with the product at ``y = 0`` taken as 0
        when the density is finite there and NaN otherwise."""
        arr = _as_support(y)
        dens = np.asarray(self.pdf(arr), dtype=float)
        with np.errstate(invalid="ignore"):
            out = np.where(arr > 0, arr**power * dens, np.where(np.isfinite(dens), 0.0, np.nan))
        return _out(out, arr.ndim == 0)


@dataclass(frozen=True)
class NakagamiFading(FadingModel):
    """Nakagami-m power gain: Gamma with shape ``m`` and scale ``omega / m``."""

    m: float
    omega: float = 1.0

    def __post_init__(self):
        if not (isinstance(self.m, (int, float)) and self.m > 0 and math.isfinite(self.m)):
            raise DomainError(f"Nakagami shape m must be a finite value > 0, got {self.m!r}")
        if not (isinstance(self.omega, (int, float)) and self.omega > 0 and math.isfinite(self.omega)):
            raise DomainError(f"Nakagami mean omega must be a finite value > 0, got {self.omega!r}")

    @property
    def rate(self) -> float:
        return self.m / self.omega

    @property
    def mean(self) -> float:
        return self.omega

    @property
    def variance(self) -> float:
        return self.omega**2 / self.m

    def _log_pdf(self, arr, shape):
        rate = self.rate
        with np.errstate(divide="ignore", invalid="ignore"):
            return shape * math.log(rate) + (shape - 1.0) * np.log(arr) - rate * arr - log_gamma(shape)

    def _gamma_density(self, arr, shape):
        # Density of Gamma(shape, scale=omega/m); +inf at 0 flags shape < 1.
        with np.errstate(over="ignore"):
            out = np.exp(self._log_pdf(arr, shape))
        at_zero = arr == 0
        if np.any(at_zero):
            if shape > 1:
                zero_val = 0.0
            elif shape == 1:
                zero_val = self.rate
            else:
                zero_val = math.inf
            out = np.where(at_zero, zero_val, out)
        return out

    def pdf(self, y):
        arr = _as_support(y)
        return _out(self._gamma_density(arr, self.m), arr.ndim == 0)

    def cdf(self, y):
        arr = _as_support(y)
        return _out(np.asarray(regularized_lower_gamma(self.m, self.rate * arr)), arr.ndim == 0)

    def ccdf(self, y):
        arr = _as_support(y)
        return _out(np.asarray(regularized_upper_gamma(self.m, self.rate * arr)), arr.ndim == 0)

    def tilted_pdf(self, y, power: float):
        arr = _as_support(y)
        # y**p * Gamma(m) density = const * Gamma(m + p) density, exact at 0.
        shape = self.m + power
        log_ratio = log_gamma(shape) - log_gamma(self.m) - power * math.log(self.rate)
        return _out(self._gamma_density(arr, shape) * math.exp(log_ratio), arr.ndim == 0)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.gamma(shape=self.m, scale=self.omega / self.m, size=size)


def nakagami_pdf(model: NakagamiFading, y):
    return model.pdf(y)


def nakagami_cdf(model: NakagamiFading, y):
    """``1 - Gamma(m, m y / omega) / Gamma(m)``."""
    return model.cdf(y)


def sample_fading(model: FadingModel, rng: np.random.Generator, size=None):
    """Draw i.i.d. gains from ``model`` using the caller's generator."""
    return model.sample(rng, size)


@dataclass(frozen=True)
class EffectiveFadingDistribution:
    """Law of the gain on the link chosen by strongest-BS selection.

    Density ``(alpha/2) y**(2/alpha) f_h(y) / D`` where the normalizer
    ``D = int_0^inf ccdf(z) z**(2/alpha - 1) dz`` is computed once, with the
    substitution ``z = u**(alpha/2)`` removing the endpoint singularity.
    """

    model: FadingModel
    alpha: float
    settings: QuadratureSettings = field(default=DEFAULT_QUADRATURE, compare=False)

    def __post_init__(self):
        _check_alpha(self.alpha)

    @property
    def tilt(self) -> float:
        return 2.0 / self.alpha

    @functools.cached_property
    def normalizer(self) -> float:
        half_alpha = self.alpha / 2.0
        model = self.model

        def integrand(u):
            return model.ccdf(u**half_alpha)

        return half_alpha * integrate(integrand, 0.0, math.inf, self.settings, vectorized=True)

    def pdf(self, y):
        arr = _as_support(y)
        out = (self.alpha / 2.0) * np.asarray(self.model.tilted_pdf(arr, self.tilt)) / self.normalizer
        return _out(out, arr.ndim == 0)

    def cdf(self, y):
        """``int_0^y pdf`` by quadrature in ``u = z**(2/alpha)``.

        After the substitution the integrand is ``z * f_h(z)`` up to a
        constant, which stays bounded at the origin for Gamma densities of
        any shape.
        """
        arr = _as_support(y)
        half_alpha = self.alpha / 2.0
        model = self.model
        const = half_alpha * half_alpha / self.normalizer

        def integrand(u):
            z = u**half_alpha
            return z * np.asarray(model.pdf(z), dtype=float)

        flat = arr.ravel()
        vals = np.empty_like(flat)
        for i, yi in enumerate(flat):
            if yi == 0:
                vals[i] = 0.0
                continue
            upper = math.inf if math.isinf(yi) else yi**self.tilt
            vals[i] = const * integrate(integrand, 0.0, upper, self.settings, vectorized=True)
        out = np.clip(vals, 0.0, 1.0).reshape(arr.shape)
        return _out(out, arr.ndim == 0)

    def mean_tilt_moment(self) -> float:
        """``E[h**(2/alpha)]`` under the original model, by direct quadrature."""
        model = self.model
        tilt = self.tilt
        return integrate(lambda y: np.asarray(model.tilted_pdf(y, tilt)), 0.0, math.inf,
                         self.settings, vectorized=True)


@functools.lru_cache(maxsize=256)
def effective_distribution(model: FadingModel, alpha: float) -> EffectiveFadingDistribution:
    """Cached :class:`EffectiveFadingDistribution` for ``(model, alpha)``."""
    return EffectiveFadingDistribution(model, float(alpha))


def effective_pdf_general(model: FadingModel, alpha: float, y):
    """Effective-fading density for an arbitrary original model.

    Takes no network parameters: tier count, densities and powers do not
    enter the law.
    """
    return effective_distribution(model, alpha).pdf(y)


def effective_cdf(model: FadingModel, alpha: float, y):
    return effective_distribution(model, alpha).cdf(y)


def effective_nakagami_model(m: float, omega: float, alpha: float) -> NakagamiFading:
    """The effective law for Nakagami-m input as a :class:`NakagamiFading`.

    Shape grows from ``m`` to ``m + 2/alpha``; scale ``omega/m`` is kept,
    so the mean becomes ``omega * (m + 2/alpha) / m``.
    """
    _check_alpha(alpha)
    base = NakagamiFading(m, omega)
    shape = m + 2.0 / alpha
    return NakagamiFading(shape, omega * shape / base.m)


def effective_pdf_nakagami(m: float, omega: float, alpha: float, y):
    return effective_nakagami_model(m, omega, alpha).pdf(y)


def effective_cdf_nakagami(m: float, omega: float, alpha: float, y):
    """``P(m + 2/alpha, m y / omega)``."""
    return effective_nakagami_model(m, omega, alpha).cdf(y)
