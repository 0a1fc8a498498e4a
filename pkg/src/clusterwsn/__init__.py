"""Round-based simulator for cluster-based wireless sensor networks."""

__version__ = "0.1.0"
