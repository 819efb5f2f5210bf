"""Pure-numpy Monte Carlo kernel (fallback backend).

Must stay bit-identical to the compiled kernel: element products are
accumulated sequentially in element order, amplitudes use explicit
sqrt(a*a + b*b) (never hypot, whose rounding is libm-specific), and the
final scaling is ``beta_eff * (acc * acc)``.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def channel_power(
    normals: np.ndarray,
    nu1: float,
    sc1: float,
    nu2: float,
    sc2: float,
    beta_eff: float,
) -> np.ndarray:
    """Squared coherent element-sum channel from standard-normal draws.

    ``normals`` has shape (trials, m_eff, 4): per element the real/imag
    parts of the first hop then of the second hop.
    """
    a = nu1 + sc1 * normals[:, :, 0]
    b = sc1 * normals[:, :, 1]
    h1 = np.sqrt(a * a + b * b)
    c = nu2 + sc2 * normals[:, :, 2]
    d = sc2 * normals[:, :, 3]
    h2 = np.sqrt(c * c + d * d)
    prod = h1 * h2
    acc = prod[:, 0].copy()
    for m in range(1, prod.shape[1]):
        acc += prod[:, m]
    return beta_eff * (acc * acc)
