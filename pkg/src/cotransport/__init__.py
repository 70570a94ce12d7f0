"""Trust-driven human-robot collaborative transportation simulator."""

__version__ = "0.1.0"
