"""Experiment engine: configuration, link simulation, campaigns, CLI."""
