"""Channel-model approximation and outage analysis for omni-surface NOMA.

Subpackages: :mod:`starnoma.specfun` (self-contained special functions),
:mod:`starnoma.channels` (the three approximate channel models),
:mod:`starnoma.network` (geometry/SINR arithmetic), :mod:`starnoma.outage`
(closed-form series, asymptotics, diversity orders, quadrature oracle),
:mod:`starnoma.mc` (deterministic Monte Carlo engine),
:mod:`starnoma.gammafit` (Gamma fitting) and :mod:`starnoma.cli`.
"""

__version__ = "0.1.0"
