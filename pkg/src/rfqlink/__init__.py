"""Measurement-analysis and link-budget tools for a cryogenic mm-wave qubit driver."""

__version__ = "0.1.0"
