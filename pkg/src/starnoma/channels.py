"""Cascaded-channel statistics and the three approximate channel models.

The combined channel of a surface with M elements is
``|g|^2 = beta_eff * (sum_m |h1_m| |h2_m|)^2`` with independent Rician
hops ``h1`` (base-to-surface) and ``h2`` (surface-to-user). Three
tractable approximations of its distribution are provided:

* central-limit model: Gaussian on the element sum (large M);
* M-fold convolution model: near-origin monomial CDF, the source of the
  exact diversity orders;
* curve-fit model: Gamma surrogate for ``|g|^2 / beta_eff``.

The exact single-element product density (a Bessel-K double series) is
also exposed; it backs the Monte Carlo and quadrature oracles.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import special as _sp

from . import specfun
from .specfun import Accuracy, ConvergenceError, DEFAULT_ACCURACY

__all__ = [
    "RicianParams",
    "EnergySplit",
    "ModeSwitch",
    "TimeSwitch",
    "ProtocolConfig",
    "LinkSide",
    "EffectiveChannelStats",
    "GammaModelParams",
    "rician_moments",
    "rician_pdf",
    "effective_stats",
    "cl_pdf",
    "cl_cdf",
    "cl_cdf_vec",
    "SigmaCoefficient",
    "mfold_sigma",
    "mfold_pdf",
    "mfold_cdf",
    "log_mfold_cdf",
    "exact_product_pdf",
    "gamma_pdf",
    "gamma_cdf",
    "gamma_cdf_vec",
]


class LinkSide(enum.Enum):
    """Which half-space a link serves: reflected or transmitted signal."""

    REFLECTING = "rfl"
    TRANSMITTING = "rfr"


@dataclass(frozen=True)
class RicianParams:
    """Shape factor of a Rician amplitude plus its derived moments.

    The amplitude is normalized to unit second moment, so
    ``h_bar**2 + eta == 1``.
    """

    k: float
    h_bar: float
    eta: float

    def __post_init__(self) -> None:
        if self.k < 0.0:
            raise ValueError(f"Rician shape factor must be >= 0, got {self.k!r}")
        if not (0.0 < self.h_bar < 1.0 and 0.0 < self.eta < 1.0):
            raise ValueError("Rician moments out of range (0, 1)")
        if abs(self.h_bar**2 + self.eta - 1.0) > 1e-12:
            raise ValueError("Rician moments violate unit second moment")


def rician_moments(k: float, acc: Accuracy = DEFAULT_ACCURACY) -> RicianParams:
    """Mean and variance of a unit-power Rician amplitude with factor k."""
    if k < 0.0:
        raise ValueError(f"Rician shape factor must be >= 0, got {k!r}")
    h_bar = math.sqrt(math.pi / (4.0 * (1.0 + k))) * specfun.hyp1f1(-0.5, 1.0, -k, acc)
    return RicianParams(k=k, h_bar=h_bar, eta=1.0 - h_bar * h_bar)


def rician_pdf(x, k: float):
    """Density of the unit-power Rician amplitude (k = 0 is Rayleigh).

    Accepts scalars or numpy arrays; evaluated in log space so large k
    does not overflow through the Bessel factor.
    """
    if k < 0.0:
        raise ValueError(f"Rician shape factor must be >= 0, got {k!r}")
    x_arr = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x_arr)
    pos = x_arr > 0.0
    xp = x_arr[pos]
    log_i0 = np.array(
        [specfun.log_bessel_i0(2.0 * math.sqrt(k * (1.0 + k)) * xi) for xi in np.atleast_1d(xp)]
    )
    log_pdf = (
        math.log(2.0 * (1.0 + k))
        - k
        + np.log(xp)
        - (1.0 + k) * xp * xp
        + log_i0
    )
    out[pos] = np.exp(log_pdf)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class EnergySplit:
    """Every element serves both sides, radiated energy split between them."""

    beta_rfl: float
    beta_rfr: float

    def __post_init__(self) -> None:
        if not (0.0 < self.beta_rfl < 1.0 and 0.0 < self.beta_rfr < 1.0):
            raise ValueError("energy fractions must lie in (0, 1)")
        if abs(self.beta_rfl + self.beta_rfr - 1.0) > 1e-12:
            raise ValueError("energy fractions must sum to 1")


@dataclass(frozen=True)
class ModeSwitch:
    """Elements partitioned between full-reflection and full-transmission."""

    m_rfl: int
    m_rfr: int

    def __post_init__(self) -> None:
        if self.m_rfl < 1 or self.m_rfr < 1:
            raise ValueError("both element groups must be nonempty")


@dataclass(frozen=True)
class TimeSwitch:
    """All elements serve one side per time block; fractions sum to 1."""

    lambda_rfl: float = 0.5
    lambda_rfr: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 < self.lambda_rfl < 1.0 and 0.0 < self.lambda_rfr < 1.0):
            raise ValueError("time fractions must lie in (0, 1)")
        if abs(self.lambda_rfl + self.lambda_rfr - 1.0) > 1e-12:
            raise ValueError("time fractions must sum to 1")


ProtocolConfig = Union[EnergySplit, ModeSwitch, TimeSwitch]


def protocol_tag(proto: ProtocolConfig) -> str:
    if isinstance(proto, EnergySplit):
        return "ES"
    if isinstance(proto, ModeSwitch):
        return "MS"
    if isinstance(proto, TimeSwitch):
        return "TS"
    raise TypeError(f"unknown protocol {proto!r}")


@dataclass(frozen=True)
class EffectiveChannelStats:
    """Equivalent Gaussian moments of ``|g|`` plus the active element count."""

    h_bar_eq: float
    eta_eq: float
    m_active: int
    beta_eff: float

    def __post_init__(self) -> None:
        if self.h_bar_eq <= 0.0 or self.eta_eq <= 0.0:
            raise ValueError("equivalent moments must be positive")
        if self.m_active < 1:
            raise ValueError("active element count must be >= 1")
        if not (0.0 < self.beta_eff <= 1.0):
            raise ValueError("effective energy fraction must be in (0, 1]")


def effective_stats(
    m_elements: int,
    rp: RicianParams,
    proto: ProtocolConfig,
    side: LinkSide,
) -> EffectiveChannelStats:
    """Equivalent mean/variance of the combined channel amplitude.

    Per element the product of the two hops has mean ``h_bar**2`` and
    variance ``2 h_bar^2 eta + eta^2``; the protocol only changes how many
    elements contribute and which energy fraction scales the sum.
    """
    if m_elements < 1:
        raise ValueError(f"element count must be >= 1, got {m_elements}")
    prod_mean = rp.h_bar**2
    prod_var = 2.0 * rp.h_bar**2 * rp.eta + rp.eta**2
    if isinstance(proto, EnergySplit):
        beta = proto.beta_rfl if side is LinkSide.REFLECTING else proto.beta_rfr
        return EffectiveChannelStats(
            h_bar_eq=math.sqrt(beta) * m_elements * prod_mean,
            eta_eq=beta * m_elements * prod_var,
            m_active=m_elements,
            beta_eff=beta,
        )
    if isinstance(proto, ModeSwitch):
        if proto.m_rfl + proto.m_rfr != m_elements:
            raise ValueError(
                f"mode-switch split {proto.m_rfl}+{proto.m_rfr} != M={m_elements}"
            )
        m_rf = proto.m_rfl if side is LinkSide.REFLECTING else proto.m_rfr
        return EffectiveChannelStats(
            h_bar_eq=m_rf * prod_mean,
            eta_eq=m_rf * prod_var,
            m_active=m_rf,
            beta_eff=1.0,
        )
    if isinstance(proto, TimeSwitch):
        return EffectiveChannelStats(
            h_bar_eq=m_elements * prod_mean,
            eta_eq=m_elements * prod_var,
            m_active=m_elements,
            beta_eff=1.0,
        )
    raise TypeError(f"unknown protocol {proto!r}")


def cl_pdf(y: float, stats: EffectiveChannelStats) -> float:
    """Central-limit density of the channel power ``|g|^2``."""
    if y <= 0.0:
        return 0.0
    sy = math.sqrt(y)
    pref = 1.0 / (2.0 * math.sqrt(2.0 * math.pi * stats.eta_eq) * sy)
    e1 = -((sy - stats.h_bar_eq) ** 2) / (2.0 * stats.eta_eq)
    e2 = -((sy + stats.h_bar_eq) ** 2) / (2.0 * stats.eta_eq)
    return pref * (math.exp(e1) + math.exp(e2))


def cl_cdf(y: float, stats: EffectiveChannelStats) -> float:
    """Central-limit CDF of the channel power.

    The erf difference is formed through erfc whenever both arguments are
    positive: for small y both erf values are within a few ulp of 1 and
    the direct difference would lose all precision.
    """
    if y <= 0.0:
        return 0.0
    sy = math.sqrt(y)
    scale = math.sqrt(2.0 * stats.eta_eq)
    lo = (stats.h_bar_eq - sy) / scale
    hi = (stats.h_bar_eq + sy) / scale
    if lo > 0.0:
        val = 0.5 * (specfun.erfc(lo) - specfun.erfc(hi))
    else:
        val = 0.5 * (specfun.erf(hi) - specfun.erf(lo))
    return min(max(val, 0.0), 1.0)


def cl_cdf_vec(y: np.ndarray, stats: EffectiveChannelStats) -> np.ndarray:
    """Vectorized twin of :func:`cl_cdf` for bulk evaluation (KS tests).

    Uses scipy's erfc for throughput; pinned against the scalar kernel in
    the test suite.
    """
    y = np.asarray(y, dtype=np.float64)
    sy = np.sqrt(np.clip(y, 0.0, None))
    scale = math.sqrt(2.0 * stats.eta_eq)
    lo = (stats.h_bar_eq - sy) / scale
    hi = (stats.h_bar_eq + sy) / scale
    val = 0.5 * (_sp.erfc(lo) - _sp.erfc(hi))
    return np.clip(np.where(y <= 0.0, 0.0, val), 0.0, 1.0)


class SigmaCoefficient:
    """Leading Laplace-domain coefficient of the product-channel series.

    ``regularized`` records that the hypergeometric factor sits at a
    divergent unit-argument point and was evaluated at 1 - delta instead;
    every consumer that only needs slopes is independent of this value.
    """

    __slots__ = ("value", "regularized")

    def __init__(self, value: float, regularized: bool):
        self.value = value
        self.regularized = regularized

    def __repr__(self) -> str:  # pragma: no cover
        return f"SigmaCoefficient({self.value!r}, regularized={self.regularized})"


@lru_cache(maxsize=256)
def _sigma_cached(t: int, n: int, k1: float, k2: float, delta: float) -> SigmaCoefficient:
    # The Rician factors enter as k1^t k2^n: each exponent belongs to the
    # Bessel-series index of its own hop (the source prints k2^t, which
    # fails the density normalization that the t=n diagonal preserves).
    hyp = specfun.hyp2f1_unit(2.0 * t + 2.0, t - n + 0.5, t + n + 2.5, delta=delta)
    log_mag = (
        (t - n + 1.0) * math.log(4.0)
        + 0.5 * math.log(math.pi)
        + (t * math.log(k1) if t else 0.0)
        + (n * math.log(k2) if n else 0.0)
        + (t + 1.0) * math.log((1.0 + k1) * (1.0 + k2))
        - 2.0 * specfun.ln_gamma(t + 1.0)
        - 2.0 * specfun.ln_gamma(n + 1.0)
        - (k1 + k2)
        + specfun.ln_gamma(2.0 * n + 2.0)
        + specfun.ln_gamma(2.0 * t + 2.0)
        - specfun.ln_gamma(t + n + 2.5)
    )
    return SigmaCoefficient(math.exp(log_mag) * hyp.value, hyp.regularized)


def mfold_sigma(
    t: int, n: int, k1: float, k2: float, delta: float = 1e-6
) -> SigmaCoefficient:
    """sigma(t, n) coefficient for Rician factors k1 (BR hop), k2 (RU hop)."""
    if t < 0 or n < 0:
        raise ValueError("indices must be nonnegative integers")
    if k1 < 0.0 or k2 < 0.0:
        raise ValueError("Rician shape factors must be >= 0")
    return _sigma_cached(int(t), int(n), float(k1), float(k2), float(delta))


def log_mfold_cdf(x: float, m_eff: int, beta_eff: float, sigma00: float) -> float:
    """ln of the near-origin M-fold CDF; exact linear form in ln x."""
    if x <= 0.0:
        return -math.inf
    if m_eff < 1:
        raise ValueError(f"effective element count must be >= 1, got {m_eff}")
    return (
        m_eff * math.log(sigma00)
        + m_eff * math.log(x)
        - math.log(2.0)
        - m_eff * math.log(beta_eff)
        - math.log(m_eff)
        - specfun.ln_gamma(2.0 * m_eff)
    )


def mfold_cdf(x: float, m_eff: int, beta_eff: float, sigma00: float) -> float:
    """Near-origin CDF ``sigma00^M x^M / (2 beta^M M (2M-1)!)``."""
    if x <= 0.0:
        return 0.0
    return math.exp(log_mfold_cdf(x, m_eff, beta_eff, sigma00))


def mfold_pdf(x: float, m_eff: int, beta_eff: float, sigma00: float) -> float:
    """Derivative of :func:`mfold_cdf`."""
    if x <= 0.0:
        return 0.0
    return m_eff / x * mfold_cdf(x, m_eff, beta_eff, sigma00)


def exact_product_pdf(
    z: float,
    k1: float,
    k2: float,
    series_cap: int = 30,
    acc: Accuracy = DEFAULT_ACCURACY,
) -> float:
    """Exact density of the single-element product amplitude |h1||h2|.

    Double Bessel-K series truncated at ``series_cap`` terms per index;
    raises :class:`ConvergenceError` when the last diagonal still
    contributes more than ``acc.rel_tol`` of the total.
    """
    if not z > 0.0:
        raise ValueError(f"amplitude must be positive, got {z!r}")
    if k1 < 0.0 or k2 < 0.0:
        raise ValueError("Rician shape factors must be >= 0")
    c = math.sqrt((1.0 + k1) * (1.0 + k2))
    arg = 2.0 * z * c
    bessel_cache: dict[int, float] = {}

    def k_order(order: int) -> float:
        order = abs(order)
        if order not in bessel_cache:
            bessel_cache[order] = specfun.bessel_k(order, arg, acc)
        return bessel_cache[order]

    total = 0.0
    converged = False
    for t in range(series_cap):
        if t > 0 and k1 == 0.0:
            converged = True
            break
        row_max = 0.0
        prev = math.inf
        for n in range(series_cap):
            if n > 0 and k2 == 0.0:
                break
            # k1^t k2^n per the two independent Bessel-series indices
            log_mag = (
                math.log(4.0)
                + (t + n + 1.0) * math.log(z)
                + (t * math.log(k1) if t else 0.0)
                + (n * math.log(k2) if n else 0.0)
                + ((t + n) / 2.0 + 1.0) * math.log((1.0 + k1) * (1.0 + k2))
                - 2.0 * specfun.ln_gamma(t + 1.0)
                - 2.0 * specfun.ln_gamma(n + 1.0)
                - (k1 + k2)
            )
            term = math.exp(log_mag) * k_order(t - n)
            total += term
            row_max = max(row_max, term)
            if term < prev and term < acc.rel_tol * total:
                break
            prev = term
        else:
            if k2 > 0.0 and term >= acc.rel_tol * total:
                raise ConvergenceError(
                    f"product density cap {series_cap} too small at z={z!r} "
                    f"(term {term:.3e} vs total {total:.3e})"
                )
        if t >= 1 and row_max < acc.rel_tol * total:
            converged = True
            break
    else:
        converged = row_max < acc.rel_tol * total or k1 == 0.0
    if not converged and k1 > 0.0:
        raise ConvergenceError(
            f"product density cap {series_cap} too small at z={z!r} "
            f"(row max {row_max:.3e} vs total {total:.3e})"
        )
    return total


@dataclass(frozen=True)
class GammaModelParams:
    """Gamma surrogate: shape alpha, scale beta_scale, protocol fraction."""

    alpha: float
    beta_scale: float
    beta_eff: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha <= 0.0 or self.beta_scale <= 0.0:
            raise ValueError("gamma parameters must be positive")
        if not (0.0 < self.beta_eff <= 1.0):
            raise ValueError("effective energy fraction must be in (0, 1]")

    @property
    def scale(self) -> float:
        return self.beta_eff * self.beta_scale


def gamma_pdf(x: float, p: GammaModelParams) -> float:
    """Curve-fit model density of the channel power."""
    if x <= 0.0:
        return 0.0
    theta = p.scale
    log_pdf = (
        (p.alpha - 1.0) * math.log(x)
        - specfun.ln_gamma(p.alpha)
        - p.alpha * math.log(theta)
        - x / theta
    )
    return math.exp(log_pdf)


def gamma_cdf(x: float, p: GammaModelParams, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Curve-fit model CDF via the regularized incomplete gamma."""
    if x <= 0.0:
        return 0.0
    return specfun.lower_inc_gamma_reg(p.alpha, x / p.scale, acc)


def gamma_cdf_vec(x: np.ndarray, p: GammaModelParams) -> np.ndarray:
    """Vectorized twin of :func:`gamma_cdf` (scipy-backed, test-pinned)."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x <= 0.0, 0.0, _sp.gammainc(p.alpha, np.clip(x, 0.0, None) / p.scale))


def lemma_fit_gamma(
    samples: np.ndarray, m_elements: int, beta_eff: float = 1.0
) -> GammaModelParams:
    """Curve-fit model with the shape pinned to the element count.

    ``samples`` are raw channel powers ``|g|^2``. The shape is fixed at
    alpha = M (matching the channel's diversity order) and only the scale
    is free; matching the sample mean of ``|g|^2 / beta_eff`` gives
    beta = mean / M. A free two-parameter fit lives in
    :mod:`starnoma.gammafit`.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < 100:
        raise ValueError("need at least 100 samples to fit the scale")
    beta = float(np.mean(samples) / beta_eff / m_elements)
    return GammaModelParams(alpha=float(m_elements), beta_scale=beta, beta_eff=beta_eff)
