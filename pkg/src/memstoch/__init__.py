"""Master-equation and Monte Carlo simulation of stochastic memristor circuits."""

__version__ = "0.1.0"
