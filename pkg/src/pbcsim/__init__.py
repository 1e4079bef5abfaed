"""Simulation toolkit for Pauli-based computation and Clifford+T circuits."""

__version__ = "0.1.0"
