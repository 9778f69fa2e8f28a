"""Building-stock electricity demand simulation and grid shortfall analysis."""

__version__ = "0.1.0"
