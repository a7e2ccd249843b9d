"""Desk-scale experiments for hardness amplification and pseudorandomness against quantum tests."""

__version__ = "0.1.0"
