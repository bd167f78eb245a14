"""Mission planning for modular self-reconfigurable robots."""

__version__ = "0.1.0"
