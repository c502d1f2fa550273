"""Numeric analysis of delayed differential systems with pseudo almost periodic coefficients."""

__version__ = "0.1.0"
