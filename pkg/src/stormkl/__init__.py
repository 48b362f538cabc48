"""Score how representatively satellite constellations sample storm clusters."""

__version__ = "0.1.0"
