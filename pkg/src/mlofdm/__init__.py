"""OFDM link-level simulator with classical and learned receivers."""

__version__ = "0.1.0"
