"""Low-rank Hankel matrix reconstruction of exponential signals and multi-coil k-space."""

__version__ = "0.1.0"
