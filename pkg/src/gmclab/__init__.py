"""gmclab: a desk-scale Monte Carlo laboratory for bulk/boundary Gaussian
multiplicative chaos on the upper half-plane.

Subpackage map:

- ``kernels``  closed-form covariance kernels and their analytic identities
- ``fieldsim`` half-plane grids, dense covariance factors, field sampling,
  Girsanov shifts
- ``gmc``      bulk/boundary/localized GMC masses of a field realization
- ``radial``   maximum law, conditioned paths, lateral densities and the
  radial-route integrals
- ``tailest``  survival curves, tail fits, the boundary-localization
  importance sampler, quotient moments, feasibility systems
- ``expcli``   experiment runner (configs, JSON records, CSV plot data, CLI)
"""

__version__ = "0.1.0"

from . import cellavg, errors, expcli, fieldsim, gmc, kernels, radial, rng, tailest

__all__ = [
    "__version__",
    "cellavg",
    "errors",
    "expcli",
    "fieldsim",
    "gmc",
    "kernels",
    "radial",
    "rng",
    "tailest",
]
