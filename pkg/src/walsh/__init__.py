"""Walsh-model time-frequency analysis.

Dyadic arithmetic, Walsh transforms, tiles and trees, variational norms,
maximal multiplier estimates and the Carleson-type operators W and W^max,
all on finite dyadic grids.
"""

__version__ = "0.1.0"
