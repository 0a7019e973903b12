"""Cavity QED spin-ensemble dynamics.

Units: time in ns, rates and frequencies in rad/ns (see ``mhz_to_angular``).
"""

from ._core import *  # noqa: F401,F403
from ._core import CqedError, __doc__  # noqa: F401
