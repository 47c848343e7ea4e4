"""Simulation and numerical security checks for a quantum-public-key
identification protocol built on phase-encoded single-qubit keys."""

__version__ = "0.1.0"
