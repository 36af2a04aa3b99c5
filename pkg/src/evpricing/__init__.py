"""Day-ahead dynamic EV charging prices for two coupled distribution networks."""

__version__ = "0.1.0"
