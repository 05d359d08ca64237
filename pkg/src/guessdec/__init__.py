"""Guessing-based decoding with abandonment for discrete memoryless channels.

Library layout:

- ``mot``          method-of-types counting and information measures
- ``ranking``      guessing order, rank functions, competitor-rank probability
- ``channel_info`` capacity, CAIDs, dispersion, Gaussian tail functions
- ``exponents``    error and strong-converse exponent functionals
- ``asymptotics``  first/second-order regions and finite-n rate schedules
- ``simulator``    Monte Carlo estimation of the ensemble error probability
- ``verify``       exhaustive small-blocklength verification suites
- ``cli``          batch command-line front end
"""

from .mot import Channel, JointType, NType, Pmf, Sequence

__version__ = "0.1.0"

__all__ = ["Pmf", "Channel", "NType", "JointType", "Sequence", "__version__"]
