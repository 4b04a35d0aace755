"""Approximation numbers of composition operators and pluripotential capacities."""

__version__ = "0.1.0"
