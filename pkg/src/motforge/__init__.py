"""Discrete martingale optimal transport, competitor calculus, monotonicity
preserving transformations and lattice Skorokhod embeddings."""

__version__ = "0.1.0"
