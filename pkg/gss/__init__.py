"""Graph spatial sampling with lagged Metropolis-Hastings walks."""

__version__ = "0.1.0"
