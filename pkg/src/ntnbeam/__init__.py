"""Downlink beamforming laboratory for a two-tier aerial network."""

__version__ = "0.1.0"
