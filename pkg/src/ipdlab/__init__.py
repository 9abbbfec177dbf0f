"""Monte Carlo tournaments of the iterated prisoner's dilemma and their analysis."""

__version__ = "0.1.0"
