"""Joint user scheduling, XOR network coding and power control for cloud RANs."""

__version__ = "0.1.0"
