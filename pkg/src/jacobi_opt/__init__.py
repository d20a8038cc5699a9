"""Jacobi-type rotation algorithms for tensor diagonalization, compression and trace maximization."""

__version__ = "0.1.0"
