"""Volumetric benchmarks for Clifford and free-fermion circuits."""

__version__ = "0.1.0"
