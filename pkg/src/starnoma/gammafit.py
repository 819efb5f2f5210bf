"""Gamma-distribution fitting for the curve-fit channel model.

Replaces the interactive curve-fitting step of the source analysis with
two reproducible estimators: moment matching (robust, used as the MLE
seed and fallback) and maximum likelihood (Newton on the shape
equation ``ln a - psi(a) = ln(mean) - mean(ln)``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .channels import GammaModelParams, gamma_cdf_vec
from .mc import empirical_cdf, ks_distance

__all__ = ["FitResult", "fit_moments", "fit_mle", "digamma", "trigamma"]


def digamma(x: float) -> float:
    """psi(x) by upward recurrence into the asymptotic expansion."""
    if not x > 0.0:
        raise ValueError(f"digamma requires x > 0, got {x!r}")
    result = 0.0
    while x < 6.0:
        result -= 1.0 / x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    # psi(x) ~ ln x - 1/(2x) - 1/(12x^2) + 1/(120x^4) - 1/(252x^6)
    return result + math.log(x) - 0.5 * inv - inv2 * (
        1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0)
    )


def trigamma(x: float) -> float:
    """psi'(x) by upward recurrence into the asymptotic expansion."""
    if not x > 0.0:
        raise ValueError(f"trigamma requires x > 0, got {x!r}")
    result = 0.0
    while x < 6.0:
        result += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    return result + inv * (
        1.0 + inv * (0.5 + inv * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 / 42.0)))
    )


@dataclass(frozen=True)
class FitResult:
    params: GammaModelParams
    n_samples: int
    method: str
    gof_ks: float

    def to_json(self) -> str:
        record = {
            "alpha": self.params.alpha,
            "beta": self.params.beta_scale,
            "beta_eff": self.params.beta_eff,
            "method": self.method,
            "gof_ks": self.gof_ks,
            "n_samples": self.n_samples,
        }
        return json.dumps(record, sort_keys=True)


def _validate(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples.size}")
    if np.any(samples <= 0.0):
        raise ValueError("samples must be positive channel powers")
    return samples


def _gof(samples: np.ndarray, params: GammaModelParams) -> float:
    ecdf = empirical_cdf(samples)
    return ks_distance(ecdf, lambda x: gamma_cdf_vec(x, params))


def fit_moments(samples: np.ndarray) -> FitResult:
    """Moment-matched Gamma parameters: a = mean^2/var, b = var/mean."""
    samples = _validate(samples)
    mean = float(np.mean(samples))
    var = float(np.var(samples))
    if var <= 1e-15 * mean * mean:
        raise ValueError("sample variance is degenerate; cannot fit a shape")
    alpha = mean * mean / var
    beta = var / mean
    params = GammaModelParams(alpha=alpha, beta_scale=beta)
    return FitResult(params=params, n_samples=samples.size, method="moments", gof_ks=_gof(samples, params))


def fit_mle(samples: np.ndarray, rel_tol: float = 1e-8, max_iter: int = 100) -> FitResult:
    """Maximum-likelihood Gamma fit, moment-matching as the Newton seed."""
    samples = _validate(samples)
    mean = float(np.mean(samples))
    var = float(np.var(samples))
    if var <= 1e-15 * mean * mean:
        raise ValueError("sample variance is degenerate; cannot fit a shape")
    s = math.log(mean) - float(np.mean(np.log(samples)))
    if s <= 0.0:
        raise ValueError("log-moment gap is nonpositive; data is not gamma-like")
    alpha = mean * mean / var
    for _ in range(max_iter):
        f = math.log(alpha) - digamma(alpha) - s
        fprime = 1.0 / alpha - trigamma(alpha)
        step = f / fprime
        new_alpha = alpha - step
        if new_alpha <= 0.0:
            new_alpha = alpha / 2.0
        if abs(new_alpha - alpha) <= rel_tol * alpha:
            alpha = new_alpha
            break
        alpha = new_alpha
    else:
        raise ValueError(f"MLE shape iteration did not converge in {max_iter} steps")
    params = GammaModelParams(alpha=alpha, beta_scale=mean / alpha)
    return FitResult(params=params, n_samples=samples.size, method="mle", gof_ks=_gof(samples, params))
