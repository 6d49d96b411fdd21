"""Prices and Greeks of Asian and down-and-out calls with MC and randomized QMC."""

__version__ = "0.1.0"
