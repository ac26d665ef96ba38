"""Simulated control stack for a two-gantry locomotion interface."""

__version__ = "0.1.0"
