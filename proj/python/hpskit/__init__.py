"""LiDAR human pose and shape toolkit."""

from ._hpskit import *  # noqa: F401,F403
from ._hpskit import __doc__  # noqa: F401

__version__ = "0.1.0"
