"""Monte Carlo engine with a compiled hot kernel and a numpy fallback.

The backend is chosen at import time: the Cython extension when built,
otherwise the pure-numpy twin. Both produce bit-identical results
(same operation order, no FMA contraction), so the choice affects
throughput only. Set ``STARNOMA_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

if os.environ.get("STARNOMA_PURE_PYTHON") == "1":
    from . import _kernels_py as kernel
else:
    try:
        from . import _kernels as kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as kernel

BACKEND = kernel.BACKEND

from .engine import (  # noqa: E402
    EmpiricalCdf,
    McConfig,
    McEstimate,
    channel_power_samples,
    diversity_slope,
    empirical_cdf,
    estimate_outage,
    ks_distance,
    sample_rician,
)

__all__ = [
    "BACKEND",
    "kernel",
    "McConfig",
    "McEstimate",
    "EmpiricalCdf",
    "sample_rician",
    "channel_power_samples",
    "estimate_outage",
    "empirical_cdf",
    "ks_distance",
    "diversity_slope",
]
