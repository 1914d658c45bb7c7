"""Spatio-temporal task planning: decompose urban queries, route sub-tasks to models, run them."""

__version__ = "0.1.0"
