"""Chunked, deterministic Monte Carlo estimation of outage probabilities.

Determinism contract: chunk ``i`` of a run draws from a counter-based
stream keyed by ``(seed, i)`` and chunks are reduced by integer counts,
so a fixed (seed, trials, chunk_size) triple yields bit-identical
estimates for any worker count and either kernel backend.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .. import network
from ..channels import (
    EnergySplit,
    LinkSide,
    ModeSwitch,
    ProtocolConfig,
    RicianParams,
)
from ..scenario import Scenario


def _get_kernel():
    from . import kernel

    return kernel


@dataclass(frozen=True)
class McConfig:
    """Trial budget plus the deterministic stream layout."""

    trials: int
    seed: int
    chunk_size: int = 65_536

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative 64-bit integer")


@dataclass(frozen=True)
class McEstimate:
    """Binomial estimate with its standard error."""

    p_hat: float
    stderr: float
    trials: int

    @classmethod
    def from_counts(cls, failures: int, trials: int) -> "McEstimate":
        p = failures / trials
        return cls(p_hat=p, stderr=math.sqrt(p * (1.0 - p) / trials), trials=trials)


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, index]))


def _chunk_sizes(trials: int, chunk_size: int) -> list[int]:
    full, rem = divmod(trials, chunk_size)
    sizes = [chunk_size] * full
    if rem:
        sizes.append(rem)
    return sizes


def _rician_transform(rp: RicianParams) -> tuple[float, float]:
    # amplitude = |nu + sc*(N0 + i N1)| has unit second moment
    nu = math.sqrt(rp.k / (1.0 + rp.k))
    sc = math.sqrt(1.0 / (2.0 * (1.0 + rp.k)))
    return nu, sc


def sample_rician(k: float, u1, u2):
    """Rician amplitude from two uniform variates (Box-Muller transform)."""
    u1 = np.clip(np.asarray(u1, dtype=np.float64), 1e-300, 1.0)
    u2 = np.asarray(u2, dtype=np.float64)
    r = np.sqrt(-2.0 * np.log(u1))
    n0 = r * np.cos(2.0 * math.pi * u2)
    n1 = r * np.sin(2.0 * math.pi * u2)
    nu = math.sqrt(k / (1.0 + k))
    sc = math.sqrt(1.0 / (2.0 * (1.0 + k)))
    a = nu + sc * n0
    b = sc * n1
    out = np.sqrt(a * a + b * b)
    return float(out) if out.ndim == 0 else out


def _protocol_effect(
    m_elements: int, proto: ProtocolConfig, side: LinkSide
) -> tuple[int, float]:
    if isinstance(proto, EnergySplit):
        beta = proto.beta_rfl if side is LinkSide.REFLECTING else proto.beta_rfr
        return m_elements, beta
    if isinstance(proto, ModeSwitch):
        m_rf = proto.m_rfl if side is LinkSide.REFLECTING else proto.m_rfr
        return m_rf, 1.0
    return m_elements, 1.0


def channel_power_samples(
    m_elements: int,
    rp1: RicianParams,
    rp2: RicianParams,
    proto: ProtocolConfig,
    side: LinkSide,
    n_samples: int,
    seed: int,
    chunk_size: int = 65_536,
) -> np.ndarray:
    """Deterministic draws of the combined channel power ``|g|^2``."""
    kernel = _get_kernel()
    m_eff, beta_eff = _protocol_effect(m_elements, proto, side)
    nu1, sc1 = _rician_transform(rp1)
    nu2, sc2 = _rician_transform(rp2)
    parts = []
    for index, size in enumerate(_chunk_sizes(n_samples, chunk_size)):
        rng = _chunk_rng(seed, index)
        normals = rng.standard_normal((size, m_eff, 4))
        parts.append(kernel.channel_power(normals, nu1, sc1, nu2, sc2, beta_eff))
    return np.concatenate(parts)


def _outage_chunk(
    scenario: Scenario,
    proto: ProtocolConfig,
    side: LinkSide,
    seed: int,
    index: int,
    size: int,
) -> int:
    kernel = _get_kernel()
    m_eff, beta_eff = _protocol_effect(scenario.m_elements, proto, side)
    nu1, sc1 = _rician_transform(scenario.rician_br)
    nu2, sc2 = _rician_transform(scenario.rician_ru)
    rng = _chunk_rng(seed, index)
    # draw order: distances first, then fading normals
    u = rng.random(size)
    d_ru = network.sample_user_distance(scenario.geometry.radius_r, u)
    normals = rng.standard_normal((size, m_eff, 4))
    g2 = kernel.channel_power(normals, nu1, sc1, nu2, sc2, beta_eff)
    pw = scenario.power
    geom = scenario.geometry
    if side is LinkSide.REFLECTING:
        fail = (network.sinr_sic(g2, geom, pw, d_ru) <= pw.g_sic) | (
            network.snr_rfl(g2, geom, pw, d_ru) <= pw.g_out
        )
    else:
        fail = network.sinr_rfr(g2, geom, pw, d_ru) < pw.g_out
    return int(np.count_nonzero(fail))


def estimate_outage(
    scenario: Scenario,
    side: LinkSide,
    mc: McConfig,
    proto: ProtocolConfig | None = None,
    threads: int = 1,
) -> McEstimate:
    """Monte Carlo outage estimate; decode events evaluated from raw SINRs.

    The SINR route is independent of the threshold algebra used by the
    analytic expressions, so agreement between the two is a real check.
    ``threads`` parallelizes over chunks and never changes the result.
    """
    proto = proto if proto is not None else scenario.protocol
    sizes = _chunk_sizes(mc.trials, mc.chunk_size)
    if threads <= 1 or len(sizes) == 1:
        failures = sum(
            _outage_chunk(scenario, proto, side, mc.seed, i, n)
            for i, n in enumerate(sizes)
        )
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = pool.map(
                lambda item: _outage_chunk(scenario, proto, side, mc.seed, *item),
                enumerate(sizes),
            )
            failures = sum(counts)
    return McEstimate.from_counts(failures, mc.trials)


class EmpiricalCdf:
    """Right-continuous empirical CDF over at least 100 samples."""

    def __init__(self, samples: Sequence[float]):
        arr = np.sort(np.asarray(samples, dtype=np.float64))
        if arr.size < 100:
            raise ValueError(f"need at least 100 samples, got {arr.size}")
        self.sorted = arr
        self.n = arr.size

    def __call__(self, x) -> np.ndarray:
        return np.searchsorted(self.sorted, np.asarray(x), side="right") / self.n


def empirical_cdf(samples: Sequence[float]) -> EmpiricalCdf:
    return EmpiricalCdf(samples)


def ks_distance(ecdf: EmpiricalCdf, model_cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Kolmogorov-Smirnov statistic sup|ecdf - model| over the sample points."""
    f = np.asarray(model_cdf(ecdf.sorted), dtype=np.float64)
    steps_hi = np.arange(1, ecdf.n + 1) / ecdf.n
    steps_lo = np.arange(0, ecdf.n) / ecdf.n
    return float(np.max(np.maximum(steps_hi - f, f - steps_lo)))


def diversity_slope(snr_db_grid: Sequence[float], pout_values: Sequence[float]) -> float:
    """Least-squares slope of log10(outage) against log10(SNR), negated."""
    snr_db = np.asarray(snr_db_grid, dtype=np.float64)
    pout = np.asarray(pout_values, dtype=np.float64)
    keep = pout > 0.0
    if np.count_nonzero(keep) < 3:
        raise ValueError("need at least 3 grid points with positive outage")
    x = snr_db[keep] / 10.0
    y = np.log10(pout[keep])
    if float(np.ptp(x)) <= 0.0:
        raise ValueError("SNR grid is degenerate")
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)
