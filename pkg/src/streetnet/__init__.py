"""Street-network feature vectors, projection and clustering of city corpora."""

__version__ = "0.1.0"
