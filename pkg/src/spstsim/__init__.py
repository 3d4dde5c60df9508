"""Single-server queue simulation for delay-sensitive exponential rewards."""

__version__ = "0.1.0"
