"""High-order tuner simulation and certificate checks (C++ core)."""

from ._hotune import *  # noqa: F401,F403
from ._hotune import __doc__  # noqa: F401
