"""netcore - random networks and biconnected graphs built from 3-connected cores."""

__version__ = "0.1.0"
