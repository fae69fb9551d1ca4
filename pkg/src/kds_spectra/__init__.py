"""kds_spectra: fixed-frequency analysis of the Klein-Gordon equation on
subextremal Kerr-de Sitter black holes.

Submodules
----------
geometry   background parameters, horizons, tortoise coordinate
angular    spheroidal eigenvalues of the angular operator
radial     radial potentials, Frobenius seeds, radial integration
spectrum   Wronskians, mode scans, frequency regimes
currents   multiplier currents and regime multipliers
geodesics  null geodesics and the E = 0 trapped orbit
cli        command line front end
"""

__version__ = "0.1.0"

from .errors import KdsError  # noqa: F401
from .geometry import BlackHoleParams  # noqa: F401
