"""Pharmaceutical patent mining: section filtering via topics and clusters, entity extraction via a neural CRF."""

__version__ = "0.1.0"
