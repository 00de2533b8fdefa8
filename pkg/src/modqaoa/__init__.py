"""Modularity-clustering QAOA simulator, optimizers and benchmark harness."""

__version__ = "0.1.0"
