"""Racing simulation and TD3 training toolkit with end-to-end and partial end-to-end agents."""

__version__ = "0.1.0"
