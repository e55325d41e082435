"""Seeded node embeddings and their geometric / downstream stability."""

__version__ = "0.1.0"
