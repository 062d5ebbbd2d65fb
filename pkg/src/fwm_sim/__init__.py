"""Degenerate backward four-wave mixing in a Doppler-broadened double-Lambda medium."""
__version__ = "0.1.0"
