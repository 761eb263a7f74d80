"""Symmetric Hamiltonian Hopf bifurcation toolkit."""

__version__ = "0.1.0"
