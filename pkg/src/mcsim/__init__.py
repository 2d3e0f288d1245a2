"""Cardiovascular pump-support simulation and probabilistic MAP forecasting."""

__version__ = "0.1.0"
