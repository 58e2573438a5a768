"""Deterministic simulation of the DIR net: manager and backup agents, I'm Alive tasks, fault injection."""

__version__ = "0.1.0"
