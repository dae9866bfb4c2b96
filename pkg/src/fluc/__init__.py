"""Natural-language UAV mission control with a deterministic simulator."""

__version__ = "0.1.0"
