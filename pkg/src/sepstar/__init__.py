"""Exact star products with separation of variables from acyclic graphs."""

__version__ = "0.1.0"
