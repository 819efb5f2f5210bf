"""Closed-form and asymptotic outage probabilities plus diversity orders.

The closed-form expressions are alternating series obtained from
Maclaurin expansions of the channel CDFs integrated over the user disc.
For large CDF arguments those series cancel catastrophically in double
precision (partial sums grow to ~1e13 while the result is ~1e-17), so
terms are accumulated in :mod:`decimal` fixed-point with the working
precision raised until the cancellation budget leaves at least 16 good
digits. Series that need more than ``max_terms`` terms raise
:class:`SeriesDivergence`; callers fall back to the quadrature oracle
and flag the data point.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field
from decimal import Decimal, localcontext

from scipy import integrate as _integrate

from . import channels, network, specfun
from .channels import (
    EffectiveChannelStats,
    GammaModelParams,
    LinkSide,
    ModeSwitch,
    ProtocolConfig,
    SigmaCoefficient,
    protocol_tag,
)
from .scenario import Scenario
from .specfun import Accuracy, DEFAULT_ACCURACY

__all__ = [
    "SeriesDivergence",
    "QuadratureError",
    "ChannelModelKind",
    "OutageQuery",
    "OutageValue",
    "DiversityReport",
    "pout_rfl_central_limit",
    "pout_rfr_central_limit",
    "pout_rfl_curvefit",
    "pout_rfr_curvefit",
    "pout_asymptotic",
    "log10_pout_asymptotic",
    "diversity_order",
    "pout_quadrature_oracle",
    "clamp_event_count",
]

_PI_50 = Decimal("3.14159265358979323846264338327950288419716939937511")


class SeriesDivergence(ArithmeticError):
    """The outage series did not converge within its term budget."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature missed its tolerance; carries the achieved error."""


class ChannelModelKind(enum.Enum):
    CENTRAL_LIMIT = "cl"
    CURVE_FIT = "cf"
    MFOLD_ASYMPTOTIC = "mfold"
    QUADRATURE_ORACLE = "quad"


@dataclass(frozen=True)
class OutageQuery:
    scenario: Scenario
    side: LinkSide
    model: ChannelModelKind
    series_terms: int = 200

    def __post_init__(self) -> None:
        if self.series_terms < 1:
            raise ValueError("series term budget must be >= 1")


@dataclass(frozen=True)
class OutageValue:
    """Outage probability plus the numerical-health flags of its evaluation."""

    value: float
    clamped: bool = False
    regularized: bool = False
    fallback: bool = False
    terms: int = 0

    def flags(self) -> str:
        parts = []
        if self.clamped:
            parts.append("clamped")
        if self.regularized:
            parts.append("regularized")
        if self.fallback:
            parts.append("series-fallback")
        return ";".join(parts)


@dataclass(frozen=True)
class DiversityReport:
    protocol: str
    side: LinkSide
    order: int


_clamp_lock = threading.Lock()
_clamp_events = 0


def clamp_event_count() -> int:
    """Process-wide number of series results clamped into [0, 1]."""
    return _clamp_events


def _record_clamp() -> None:
    global _clamp_events
    with _clamp_lock:
        _clamp_events += 1


def _upsilon(side: LinkSide, pw: network.PowerConfig) -> float:
    if side is LinkSide.REFLECTING:
        return network.upsilon_max(pw)
    return network.upsilon_2(pw)


def _c_ru(side: LinkSide, geom: network.Geometry) -> float:
    return geom.c_ru_rfl if side is LinkSide.REFLECTING else geom.c_ru_rfr


def _threshold_coefficient(scenario: Scenario, side: LinkSide) -> float:
    """T such that the outage event at user distance x is |g|^2 <= T x^alpha."""
    geom = scenario.geometry
    ups = _upsilon(side, scenario.power)
    return (
        ups
        * geom.d_br**geom.alpha_t
        / (scenario.power.p_t * geom.c_br * _c_ru(side, geom))
    )


def _product_stats(scenario: Scenario) -> tuple[float, float]:
    """Mean and variance of one element's hop product |h1||h2|."""
    mean = scenario.rician_br.h_bar * scenario.rician_ru.h_bar
    return mean, 1.0 - mean * mean


def _effective_stats(scenario: Scenario, side: LinkSide) -> EffectiveChannelStats:
    # The two hops may carry different Rician factors, so the per-element
    # product moments are formed here instead of channels.effective_stats
    # (which assumes a single factor for both hops).
    prod_mean, prod_var = _product_stats(scenario)
    proto = scenario.protocol
    m = scenario.m_elements
    if isinstance(proto, channels.EnergySplit):
        beta = proto.beta_rfl if side is LinkSide.REFLECTING else proto.beta_rfr
        m_eff = m
    elif isinstance(proto, ModeSwitch):
        beta = 1.0
        m_eff = proto.m_rfl if side is LinkSide.REFLECTING else proto.m_rfr
    else:
        beta = 1.0
        m_eff = m
    return EffectiveChannelStats(
        h_bar_eq=math.sqrt(beta) * m_eff * prod_mean,
        eta_eq=beta * m_eff * prod_var,
        m_active=m_eff,
        beta_eff=beta,
    )


def _beta_eff(scenario: Scenario, side: LinkSide) -> float:
    proto = scenario.protocol
    if isinstance(proto, channels.EnergySplit):
        return proto.beta_rfl if side is LinkSide.REFLECTING else proto.beta_rfr
    return 1.0


def _m_eff(scenario: Scenario, side: LinkSide) -> int:
    proto = scenario.protocol
    if isinstance(proto, ModeSwitch):
        return proto.m_rfl if side is LinkSide.REFLECTING else proto.m_rfr
    return scenario.m_elements


def _finish(total: Decimal, terms: int, regularized: bool = False) -> OutageValue:
    value = float(total)
    clamped = value < 0.0 or value > 1.0
    if clamped:
        _record_clamp()
        value = min(max(value, 0.0), 1.0)
    return OutageValue(value=value, clamped=clamped, regularized=regularized, terms=terms)


def _sum_until_stable(run, label: str) -> tuple[Decimal, int]:
    """Escalate the decimal working precision until two runs agree.

    The cancellation loss cannot be judged from a single pass (a fully
    cancelled sum reports a plausible but garbage magnitude), so the sum
    is accepted only once two precisions agree to 1e-12 relative; the
    peak-term/partial-sum ratio just sizes the next escalation step.
    """
    prec = 45
    prev: float | None = None
    for _ in range(6):
        total, peak, terms = run(prec)
        value = float(total)
        if prev is not None and math.isclose(value, prev, rel_tol=1e-12, abs_tol=1e-250):
            return total, terms
        if total != 0 and peak > abs(total):
            digits_lost = float((peak / abs(total)).log10())
        else:
            digits_lost = 0.0
        prec = max(prec + 20, int(digits_lost) + 35)
        prev = value
    raise SeriesDivergence(f"{label}: precision escalation failed to stabilize")


def _central_limit_series(
    scenario: Scenario, side: LinkSide, acc: Accuracy
) -> OutageValue:
    try:
        t_coeff = _threshold_coefficient(scenario, side)
    except network.OutageCertain:
        return OutageValue(value=1.0)
    stats = _effective_stats(scenario, side)
    geom = scenario.geometry
    alpha_t = geom.alpha_t

    def run(prec: int) -> tuple[Decimal, Decimal, int]:
        # Every per-term factor is formed in Decimal: a float-rounded
        # divisor that varies with the summation index perturbs terms at
        # 1e-16 relative, which the alternating cancellation amplifies to
        # peak_term * 1e-16 in the result.
        with localcontext() as ctx:
            ctx.prec = prec
            d_a = Decimal(stats.h_bar_eq)
            d_2eta = Decimal(2.0 * stats.eta_eq)
            d_alpha_t = Decimal(alpha_t)
            sqrt_2eta = d_2eta.sqrt()
            # B = sqrt(T R^alpha): the full CDF argument at the disc edge
            d_b = (Decimal(t_coeff) * (d_alpha_t * Decimal(geom.radius_r).ln()).exp()).sqrt()
            four_over_sqrtpi = Decimal(4) / _PI_50.sqrt()
            pow_a = [Decimal(1)]
            pow_b = [Decimal(1)]
            total = Decimal(0)
            peak = Decimal(0)
            below = 0
            for n in range(acc.max_terms):
                two_n1 = 2 * n + 1
                while len(pow_a) <= two_n1:
                    pow_a.append(pow_a[-1] * d_a)
                    pow_b.append(pow_b[-1] * d_b)
                inner = Decimal(0)
                for r in range(1, two_n1 + 1, 2):
                    inner += (
                        Decimal(math.comb(two_n1, r))
                        * pow_a[two_n1 - r]
                        * pow_b[r]
                        / (d_alpha_t * r / 2 + 2)
                    )
                term = (
                    four_over_sqrtpi
                    * Decimal((-1) ** n)
                    * inner
                    / (Decimal(math.factorial(n)) * Decimal(two_n1) * sqrt_2eta ** two_n1)
                )
                total += term
                peak = max(peak, abs(term))
                if abs(term) <= Decimal(acc.rel_tol) * abs(total) and n >= 2:
                    below += 1
                    if below >= 2:
                        return total, peak, n + 1
                else:
                    below = 0
            raise SeriesDivergence(
                f"central-limit outage series needs more than {acc.max_terms} terms "
                f"(edge argument {(stats.h_bar_eq + float(d_b)) / float(sqrt_2eta):.2f})"
            )

    total, terms = _sum_until_stable(run, "central-limit outage series")
    return _finish(total, terms)


def pout_rfl_central_limit(
    scenario: Scenario, acc: Accuracy = DEFAULT_ACCURACY
) -> OutageValue:
    """Reflected-user outage, central-limit model (joint SIC + decode event)."""
    return _central_limit_series(scenario, LinkSide.REFLECTING, acc)


def pout_rfr_central_limit(
    scenario: Scenario, acc: Accuracy = DEFAULT_ACCURACY
) -> OutageValue:
    """Transmitted-user outage, central-limit model."""
    return _central_limit_series(scenario, LinkSide.TRANSMITTING, acc)


def _curvefit_series(
    scenario: Scenario, side: LinkSide, gp: GammaModelParams, acc: Accuracy
) -> OutageValue:
    try:
        t_coeff = _threshold_coefficient(scenario, side)
    except network.OutageCertain:
        return OutageValue(value=1.0)
    geom = scenario.geometry
    alpha_t = geom.alpha_t
    # W = T R^alpha / (beta_eff * beta): argument of the incomplete gamma
    # at the disc edge
    w = t_coeff * geom.radius_r**alpha_t / gp.scale
    alpha = gp.alpha

    def run(prec: int) -> tuple[Decimal, Decimal, int]:
        # all index-dependent factors in Decimal (see _central_limit_series)
        with localcontext() as ctx:
            ctx.prec = prec
            d_w = Decimal(w)
            d_alpha = Decimal(alpha)
            d_alpha_t = Decimal(alpha_t)
            w_pow = (d_alpha * d_w.ln()).exp()
            two_over_gamma = Decimal(2) * (-Decimal(specfun.ln_gamma(alpha))).exp()
            total = Decimal(0)
            peak = Decimal(0)
            below = 0
            factorial = Decimal(1)
            for n in range(acc.max_terms):
                if n > 0:
                    factorial *= Decimal(n)
                    w_pow *= d_w
                term = (
                    two_over_gamma
                    * Decimal((-1) ** n)
                    * w_pow
                    / (factorial * (d_alpha + n) * (d_alpha_t * (d_alpha + n) + 2))
                )
                total += term
                peak = max(peak, abs(term))
                if abs(term) <= Decimal(acc.rel_tol) * abs(total) and n >= 2:
                    below += 1
                    if below >= 2:
                        return total, peak, n + 1
                else:
                    below = 0
            raise SeriesDivergence(
                f"curve-fit outage series needs more than {acc.max_terms} terms "
                f"(edge argument {w:.3g}, shape {alpha:.3g})"
            )

    total, terms = _sum_until_stable(run, "curve-fit outage series")
    return _finish(total, terms)


def pout_rfl_curvefit(
    scenario: Scenario, gp: GammaModelParams, acc: Accuracy = DEFAULT_ACCURACY
) -> OutageValue:
    """Reflected-user outage under the Gamma curve-fit model."""
    return _curvefit_series(scenario, LinkSide.REFLECTING, gp, acc)


def pout_rfr_curvefit(
    scenario: Scenario, gp: GammaModelParams, acc: Accuracy = DEFAULT_ACCURACY
) -> OutageValue:
    """Transmitted-user outage under the Gamma curve-fit model."""
    return _curvefit_series(scenario, LinkSide.TRANSMITTING, gp, acc)


def log10_pout_asymptotic(
    scenario: Scenario,
    proto: ProtocolConfig,
    side: LinkSide,
    sigma00: SigmaCoefficient,
) -> float:
    """log10 of the high-SNR monomial outage; exact linear in log10(rho_t).

    The leading coefficient sigma00 is passed in explicitly because its
    hypergeometric factor is regularized (see channels.mfold_sigma);
    slope-based consumers are independent of its value.
    """
    geom = scenario.geometry
    ups = _upsilon(side, scenario.power)
    m_eff = _m_eff_proto(scenario.m_elements, proto, side)
    beta_eff = _beta_eff_proto(proto, side)
    bracket = (
        ups * geom.d_br**geom.alpha_t / (scenario.power.p_t * geom.c_br * _c_ru(side, geom))
    )
    ln_p = (
        m_eff * math.log(sigma00.value)
        + geom.alpha_t * m_eff * math.log(geom.radius_r)
        - math.log(m_eff)
        - math.log(geom.alpha_t * m_eff + 2.0)
        - specfun.ln_gamma(2.0 * m_eff)
        - m_eff * math.log(beta_eff)
        + m_eff * math.log(bracket)
    )
    return ln_p / math.log(10.0)


def _m_eff_proto(m_elements: int, proto: ProtocolConfig, side: LinkSide) -> int:
    if isinstance(proto, ModeSwitch):
        return proto.m_rfl if side is LinkSide.REFLECTING else proto.m_rfr
    return m_elements


def _beta_eff_proto(proto: ProtocolConfig, side: LinkSide) -> float:
    if isinstance(proto, channels.EnergySplit):
        return proto.beta_rfl if side is LinkSide.REFLECTING else proto.beta_rfr
    return 1.0


def pout_asymptotic(
    scenario: Scenario,
    proto: ProtocolConfig,
    side: LinkSide,
    sigma00: SigmaCoefficient,
) -> OutageValue:
    """High-SNR outage from the M-fold convolution model (may underflow)."""
    try:
        log10_p = log10_pout_asymptotic(scenario, proto, side, sigma00)
    except network.OutageCertain:
        return OutageValue(value=1.0, regularized=sigma00.regularized)
    value = 10.0**log10_p
    clamped = value > 1.0
    if clamped:
        _record_clamp()
        value = 1.0
    return OutageValue(value=value, clamped=clamped, regularized=sigma00.regularized)


def diversity_order(proto: ProtocolConfig, side: LinkSide, m_elements: int) -> DiversityReport:
    """Diversity order: the active element count of the queried side."""
    return DiversityReport(
        protocol=protocol_tag(proto),
        side=side,
        order=_m_eff_proto(m_elements, proto, side),
    )


def pout_quadrature_oracle(
    q: OutageQuery,
    gamma_params: GammaModelParams | None = None,
    sigma00: SigmaCoefficient | None = None,
) -> float:
    """Numerically integrate the channel CDF over the user-distance density.

    Independent of the series expansions: the CDF is evaluated directly
    (stable erfc form for the central-limit model) and integrated with
    adaptive quadrature at 1e-10 absolute / 1e-9 relative tolerance.
    """
    scenario = q.scenario
    try:
        t_coeff = _threshold_coefficient(scenario, q.side)
    except network.OutageCertain:
        return 1.0

    if q.model is ChannelModelKind.CENTRAL_LIMIT:
        stats = _effective_stats(scenario, q.side)

        def cdf(y: float) -> float:
            return channels.cl_cdf(y, stats)

    elif q.model is ChannelModelKind.CURVE_FIT:
        if gamma_params is None:
            raise ValueError("curve-fit oracle needs gamma parameters")

        def cdf(y: float) -> float:
            return channels.gamma_cdf(y, gamma_params)

    elif q.model is ChannelModelKind.MFOLD_ASYMPTOTIC:
        if sigma00 is None:
            raise ValueError("M-fold oracle needs the sigma(0,0) coefficient")
        m_eff = _m_eff(scenario, q.side)
        beta = _beta_eff(scenario, q.side)

        def cdf(y: float) -> float:
            return min(channels.mfold_cdf(y, m_eff, beta, sigma00.value), 1.0)

    else:
        raise ValueError(f"oracle cannot integrate model {q.model}")

    geom = scenario.geometry
    alpha_t = geom.alpha_t
    radius = geom.radius_r

    def integrand(x: float) -> float:
        return cdf(t_coeff * x**alpha_t) * 2.0 * x / (radius * radius)

    value, abserr, info, *rest = _integrate.quad(
        integrand, 0.0, radius, epsabs=1e-10, epsrel=1e-9, limit=200, full_output=1
    )
    if rest:
        raise QuadratureError(f"quadrature trouble: {rest[0]}; achieved {abserr:.3e}")
    return min(max(value, 0.0), 1.0)
