"""Measure how well public NIDS datasets cover network-detectable ATT&CK
techniques used in energy-sector incidents."""

__version__ = "0.1.0"
