"""Geometry, user deployment, path loss and SINR arithmetic.

Powers are stored in watts throughout; dBm/dB conversion happens only at
the CLI boundary via the helpers here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "OutageCertain",
    "Geometry",
    "PowerConfig",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "sample_user_distance",
    "pathloss",
    "sinr_sic",
    "snr_rfl",
    "sinr_rfr",
    "upsilon_max",
    "upsilon_2",
]

_SPEED_OF_LIGHT = 3.0e8


class OutageCertain(Exception):
    """Power split cannot satisfy the threshold: outage probability is 1."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def free_space_intercept(f_c: float) -> float:
    """Reference-distance (1 m) intercept (c / (4 pi f_c))^2."""
    return (_SPEED_OF_LIGHT / (4.0 * math.pi * f_c)) ** 2


@dataclass(frozen=True)
class Geometry:
    """Cell geometry: fixed BS-to-surface hop plus a user disc of radius R.

    All three intercepts are equal by construction; they are stored
    separately because every link formula names its own.
    """

    d_br: float
    radius_r: float
    alpha_t: float
    f_c: float
    c_br: float = field(default=0.0)
    c_ru_rfl: float = field(default=0.0)
    c_ru_rfr: float = field(default=0.0)

    def __post_init__(self) -> None:
        intercept = free_space_intercept(self.f_c)
        for name in ("c_br", "c_ru_rfl", "c_ru_rfr"):
            if getattr(self, name) == 0.0:
                object.__setattr__(self, name, intercept)
        if min(self.d_br, self.radius_r, self.alpha_t, self.f_c) <= 0.0:
            raise ValueError("geometry parameters must be positive")
        if min(self.c_br, self.c_ru_rfl, self.c_ru_rfr) <= 0.0:
            raise ValueError("intercepts must be positive")


@dataclass(frozen=True)
class PowerConfig:
    """Transmit/noise powers (watts), NOMA split and decoding thresholds."""

    p_t: float
    sigma2: float
    a_rfl: float
    a_rfr: float
    g_sic: float
    g_out: float

    def __post_init__(self) -> None:
        if self.p_t <= 0.0 or self.sigma2 <= 0.0:
            raise ValueError("powers must be positive")
        if abs(self.a_rfl + self.a_rfr - 1.0) > 1e-12:
            raise ValueError("power allocation fractions must sum to 1")
        if not self.a_rfl < self.a_rfr:
            raise ValueError("the reflected-user fraction must be the smaller one")
        if self.g_sic <= 0.0 or self.g_out <= 0.0:
            raise ValueError("thresholds must be positive")


def sample_user_distance(radius_r: float, u):
    """Map a uniform variate to a user distance on the disc (R * sqrt(u))."""
    return radius_r * u**0.5


def pathloss(d: float, alpha: float, c: float) -> float:
    """Reference-distance power gain c * d^-alpha."""
    if not d > 0.0:
        raise ValueError(f"distance must be positive, got {d!r}")
    return c * d ** (-alpha)


def _signal(g2, geom: Geometry, pw: PowerConfig, d_ru, c_ru: float):
    pl = pathloss(geom.d_br, geom.alpha_t, geom.c_br) * c_ru * d_ru ** (-geom.alpha_t)
    return pw.p_t * pl * g2


def sinr_sic(g2, geom: Geometry, pw: PowerConfig, d_ru):
    """SINR of the reflected user decoding the other user's message."""
    s = _signal(g2, geom, pw, d_ru, geom.c_ru_rfl)
    return pw.a_rfr * s / (pw.a_rfl * s + pw.sigma2)


def snr_rfl(g2, geom: Geometry, pw: PowerConfig, d_ru):
    """Post-cancellation SNR of the reflected user (linear in g2)."""
    return pw.a_rfl * _signal(g2, geom, pw, d_ru, geom.c_ru_rfl) / pw.sigma2


def sinr_rfr(g2, geom: Geometry, pw: PowerConfig, d_ru):
    """SINR of the transmitted user; bounded above by a_rfr / a_rfl."""
    s = _signal(g2, geom, pw, d_ru, geom.c_ru_rfr)
    return pw.a_rfr * s / (pw.a_rfl * s + pw.sigma2)


def upsilon_max(pw: PowerConfig) -> float:
    """Joint power-normalized threshold of the reflected user's two events.

    Raises :class:`OutageCertain` when the split cannot beat the SIC
    threshold (a_rfr <= g_sic * a_rfl), where outage has probability 1.
    """
    head = pw.a_rfr - pw.g_sic * pw.a_rfl
    if head <= 0.0:
        raise OutageCertain(
            f"a_rfr={pw.a_rfr} <= g_sic*a_rfl={pw.g_sic * pw.a_rfl}"
        )
    if pw.a_rfl <= 0.0:
        raise OutageCertain("a_rfl must be positive for the decode event")
    return max(pw.g_sic * pw.sigma2 / head, pw.g_out * pw.sigma2 / pw.a_rfl)


def upsilon_2(pw: PowerConfig) -> float:
    """Power-normalized outage threshold of the transmitted user."""
    head = pw.a_rfr - pw.g_out * pw.a_rfl
    if head <= 0.0:
        raise OutageCertain(
            f"a_rfr={pw.a_rfr} <= g_out*a_rfl={pw.g_out * pw.a_rfl}"
        )
    return pw.g_out * pw.sigma2 / head
