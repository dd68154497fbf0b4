"""Existence checks and numerical solutions for periodic phi-Laplacian systems."""

from .errors import *  # noqa: F401,F403
from .phi_ops import PhiMap, phi_apply, phi_invert  # noqa: F401

__version__ = "0.1.0"
