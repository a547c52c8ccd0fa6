"""Python bindings for the aia spiking-network engine."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
