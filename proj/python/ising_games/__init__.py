"""Approximate marginal inference in Ising models via game dynamics."""

from ising_games._core import *  # noqa: F401,F403
from ising_games._core import __doc__  # noqa: F401

__version__ = "0.1.0"
