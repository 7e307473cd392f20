"""Expected future cost curves for measured-peak grid tariffs."""

__version__ = "0.1.0"
